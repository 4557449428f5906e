from glmvi.cli import main

main()
