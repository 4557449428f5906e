"""Seeded replication sweeps behind the profile, SA/SAA and fixed-design experiments.

Every replication draws from its own counter-based stream keyed by
``(master_seed, experiment, link, K, replication)``, so a row never depends
on which other rows were computed or in what order.
"""

from __future__ import annotations

import csv
import io
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from glmvi.glm_model import GlmModel, draw_signal_on_sphere, estimate_M, sample_observations
from glmvi.links import EXPERIMENT_LINKS, Link, h_profile, modulus_profile
from glmvi.sa_estimator import SaConfig, default_kappa_grid, error_bound, run_sa, tune_kappa
from glmvi.saa_estimator import solve_saa
from glmvi.single_obs import SingleObsModel, gaussian_ensemble, observe, solve_single_obs
from glmvi.vi_core import unit_ball

PROFILE_COLUMNS = ["link", "t", "h", "R", "modulus"]
EXPERIMENT_COLUMNS = ["experiment", "link", "K", "replication", "seed", "estimator",
                      "error", "sq_error", "bound", "wall_time_s", "kappa", "status"]

EXPERIMENTS = ("profiles", "fig2", "fig3", "rate")
_STREAM_IDS = {"profiles": 0, "fig2": 1, "fig3": 2, "rate": 1, "moment": 3}

SCALES = {
    "desk": {
        "fig2": dict(n=20, K=(400, 1000, 4000), replications=10),
        "fig3": dict(n=20, K=(400, 1000, 2000), replications=10),
    },
    "paper": {
        "fig2": dict(n=100, K=(400, 1000, 4000, 10_000, 40_000), replications=10),
        "fig3": dict(n=100, K=(400, 1000, 4000, 10_000, 40_000), replications=10),
    },
}


@dataclass
class ExperimentConfig:
    experiment: str
    master_seed: int | None = None
    links: tuple = EXPERIMENT_LINKS
    n: int = 20
    K: tuple = (400, 1000, 4000)
    replications: int = 10
    sigma: float = 1.0
    lambdas: tuple = (0.1, 1.0)
    kappa_mode: str = "tuned"
    tol: float = 1e-8
    jobs: int = 1
    timing: bool = True
    out: str | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        self.links = tuple(Link.parse(l) for l in self.links)
        self.K = tuple(int(k) for k in self.K)
        self.lambdas = tuple(float(v) for v in self.lambdas)
        if not self.K or list(self.K) != sorted(set(self.K)) or min(self.K) < 1:
            raise ValueError("K list must be nonempty, positive and strictly ascending")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.kappa_mode not in ("tuned", "analytic"):
            raise ValueError("kappa_mode must be 'tuned' or 'analytic'")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")

    @classmethod
    def at_scale(cls, experiment: str, scale: str = "desk", **overrides) -> "ExperimentConfig":
        base = dict(SCALES[scale].get("fig2" if experiment == "rate" else experiment, {}))
        base.update(overrides)
        return cls(experiment, **base)


def _link_code(link: Link) -> int:
    return list(Link).index(link)


def _lambda_code(lam: float) -> int:
    return int(round(lam * 1_000_000))


def stream(master_seed: int, *keys: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(master_seed, spawn_key=keys)))


def stream_id(master_seed: int, *keys: int) -> int:
    """A compact integer identifying the stream, written to the ``seed`` column."""
    return int(np.random.SeedSequence(master_seed, spawn_key=keys).generate_state(1)[0])


def _require_seed(config: ExperimentConfig):
    if config.master_seed is None:
        raise ValueError("--seed is required for experiments")


# ---------------------------------------------------------------------------
# profiles


def run_profiles(config: ExperimentConfig, points: int = 60) -> list[dict]:
    """``h(t)`` and the ball modulus for each link on a uniform grid of ``(0, 3]``."""
    rows = []
    for link in config.links:
        for t in np.linspace(3.0 / points, 3.0, points):
            rows.append(dict(link=link.value, t=t, h=h_profile(link, t), R=t,
                             modulus=modulus_profile(link, t)))
    return rows


# ---------------------------------------------------------------------------
# fig2: SA versus SAA on random-design observations


def _fig2_task(args):
    config, link, K, r, M = args
    ids = (_STREAM_IDS["fig2"], _link_code(link), K, r)
    rng = stream(config.master_seed, *ids)
    seed = stream_id(config.master_seed, *ids)
    model = GlmModel.for_experiment(link, config.n, config.sigma)
    region = unit_ball(config.n)
    x = draw_signal_on_sphere(config.n, rng)
    obs = sample_observations(model, x, K, rng)
    kappa_ref = modulus_profile(link, region.radius)

    t0 = time.perf_counter()
    if config.kappa_mode == "tuned":
        kappa = tune_kappa(model, obs, default_kappa_grid(link), rng)
    else:
        kappa = kappa_ref
    sa = run_sa(model, x, SaConfig(kappa), observations=obs, region=region)
    t1 = time.perf_counter()
    saa = solve_saa(obs, link, region, tol=config.tol, rng=rng)
    t2 = time.perf_counter()

    common = dict(experiment="fig2", link=link.value, K=K, replication=r, seed=seed)
    err_sa = float(np.linalg.norm(sa.estimate - x))
    err_saa = float(np.linalg.norm(saa.estimate - x))
    return [
        dict(common, estimator="SA", error=err_sa, sq_error=err_sa**2,
             bound=float(np.sqrt(error_bound(M, kappa_ref, K))),
             wall_time_s=(t1 - t0) if config.timing else 0.0, kappa=kappa, status="ok"),
        dict(common, estimator="SAA", error=err_saa, sq_error=err_saa**2, bound=np.nan,
             wall_time_s=(t2 - t1) if config.timing else 0.0, kappa=saa.kappa,
             status=";".join(saa.flags) or "ok"),
    ]


def _moment_constant(config: ExperimentConfig, link: Link) -> float:
    model = GlmModel.for_experiment(link, config.n, config.sigma)
    return estimate_M(model, rng=stream(config.master_seed, _STREAM_IDS["moment"], _link_code(link)))


def _map(func, tasks, jobs):
    if jobs == 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, tasks))


def _sorted_rows(chunks) -> list[dict]:
    rows = [row for chunk in chunks for row in chunk]
    rows.sort(key=lambda r: (r["experiment"], r["link"], r["K"], r["replication"], r["estimator"]))
    return rows


def run_fig2(config: ExperimentConfig) -> list[dict]:
    """Tuned SA and SAA errors for each link, sample size and replication."""
    _require_seed(config)
    tasks = []
    for link in config.links:
        M = _moment_constant(config, link)
        tasks += [(config, link, K, r, M) for K in config.K for r in range(config.replications)]
    return _sorted_rows(_map(_fig2_task, tasks, config.jobs))


# ---------------------------------------------------------------------------
# fig3: single-observation arctan experiment


def _fig3_task(args):
    config, lam, K, r = args
    ids = (_STREAM_IDS["fig3"], _lambda_code(lam), K, r)
    rng = stream(config.master_seed, *ids)
    region = unit_ball(config.n)
    eta = gaussian_ensemble(config.n, K, rng)
    x = region.sample(1, rng)[0]
    model = SingleObsModel(eta, Link.ARCTAN, lam)
    y = observe(model, x, rng)
    t0 = time.perf_counter()
    res = solve_single_obs(model, y, region, tol=config.tol, rng=rng, x_true=x)
    t1 = time.perf_counter()
    err = float(np.linalg.norm(res.estimate - x))
    return [dict(experiment=f"fig3:lambda={lam:g}", link="arctan", K=K, replication=r,
                 seed=stream_id(config.master_seed, *ids), estimator="SAA", error=err,
                 sq_error=err**2, bound=res.bound,
                 wall_time_s=(t1 - t0) if config.timing else 0.0, kappa=res.kappa,
                 status="ok" if res.converged else ";".join(res.flags))]


def run_fig3(config: ExperimentConfig) -> list[dict]:
    _require_seed(config)
    tasks = [(config, lam, K, r) for lam in config.lambdas
             for K in config.K for r in range(config.replications)]
    return _sorted_rows(_map(_fig3_task, tasks, config.jobs))


# ---------------------------------------------------------------------------
# rate fitting


def fit_rate(rows: Sequence[dict], estimator: str, link) -> float:
    """Least-squares slope of log(mean error) against log(K)."""
    link = Link.parse(link).value
    errors: dict[int, list] = {}
    for row in rows:
        if row["estimator"] == estimator and row["link"] == link:
            errors.setdefault(int(row["K"]), []).append(float(row["error"]))
    if len(errors) < 3:
        raise ValueError(f"need at least 3 distinct K values, got {len(errors)}")
    Ks = np.array(sorted(errors), dtype=float)
    means = np.array([np.mean(errors[int(k)]) for k in Ks])
    slope, _ = np.polyfit(np.log(Ks), np.log(means), 1)
    return float(slope)


def rate_table(rows: Sequence[dict]) -> list[dict]:
    pairs = sorted({(r["estimator"], r["link"]) for r in rows})
    return [dict(estimator=e, link=l, slope=fit_rate(rows, e, l)) for e, l in pairs]


# ---------------------------------------------------------------------------
# CSV


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def to_csv(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def write_csv(rows: Sequence[dict], columns: Sequence[str], path) -> str:
    text = to_csv(rows, columns)
    if path is not None:
        directory = os.path.dirname(os.path.abspath(path))
        if not os.path.isdir(directory):
            raise OSError(f"output directory does not exist: {directory}")
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
