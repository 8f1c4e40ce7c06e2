"""Replicated five-estimator comparison with deterministic parallel scheduling.

Each replica derives its own random streams from (master seed, replica index,
chain role), so results are bit-identical no matter how replicas are spread
over workers.  Chains are produced lazily per replica and shared between the
estimators that need them.  Output rows are sorted by (method, replica).

Timing is reported on standard error only: the data rows must be
byte-reproducible, and wall-clock readings are not.
"""

from __future__ import annotations

import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, asdict
from typing import Optional, Sequence

import numpy as np

from .errors import ParameterError, SdlabError
from .estimators import (
    coherence_diagnostic,
    estimate_mr,
    estimate_vw,
    ratio_reciprocal_with_se,
)
from .evidence import (
    bridge_bf,
    chib_evidence,
    complete_null_chain,
    is_evidence,
    mle_conditional_completion,
)
from .probit import (
    GPriorSpec,
    ProbitData,
    ProbitModel,
    gibbs_probit,
    probit_mle,
    problem_from_model,
)
from .rng import RngStream

METHOD_NAMES = ("mr", "vw", "chib", "is", "bridge")

# chain/draw roles inside one replica; stream id = (replica-1)*ROLE_SPAN + role
ROLE_FULL = 0
ROLE_TILDE = 1
ROLE_NULL_CONDITIONAL = 2
ROLE_NULL_MODEL = 3
ROLE_IS_FULL = 4
ROLE_IS_NULL = 5
ROLE_BRIDGE_COMPLETION = 6
ROLE_SPAN = 16

CSV_HEADER = (
    "method,replica,seed,iters,burnin,bf_estimate,log_bf,"
    "rb_term,ratio_term,coherence_stat,elapsed_ms,status"
)


@dataclass
class CellResult:
    """One (method, replica) outcome; metadata suffices to re-run the cell."""

    method: str
    replica: int
    seed: int
    iters: int
    burnin: int
    bf_estimate: Optional[float] = None
    log_bf: Optional[float] = None
    rb_term: Optional[float] = None
    ratio_term: Optional[float] = None
    coherence_stat: Optional[float] = None
    status: str = "ok"


def _fmt(value) -> str:
    return "" if value is None else f"{value:.17g}"


def rows_to_csv(cells: Sequence[CellResult]) -> str:
    lines = [CSV_HEADER]
    for c in cells:
        status = c.status.replace(",", ";").replace("\n", " ")
        lines.append(
            f"{c.method},{c.replica},{c.seed},{c.iters},{c.burnin},"
            f"{_fmt(c.bf_estimate)},{_fmt(c.log_bf)},{_fmt(c.rb_term)},"
            f"{_fmt(c.ratio_term)},{_fmt(c.coherence_stat)},,{status}"
        )
    return "\n".join(lines) + "\n"


def rows_to_json(cells: Sequence[CellResult]) -> str:
    payload = []
    for c in cells:
        row = asdict(c)
        row["elapsed_ms"] = None
        payload.append(row)
    return json.dumps(payload, indent=2) + "\n"


def _replica_cells(data: ProbitData, g, tested_index, t, burnin, seed, replica, methods):
    model = ProbitModel(data, GPriorSpec(g, tested_index))
    problem = problem_from_model(model)
    data_null = model.data_null
    base = (replica - 1) * ROLE_SPAN

    def stream(role: int) -> RngStream:
        return RngStream(seed, base + role)

    chains = {}

    def chain(role: int):
        if role not in chains:
            if role == ROLE_FULL:
                chains[role] = gibbs_probit(
                    data, model.cov_full, t, stream(role), "full", model.j, burnin
                )
            elif role == ROLE_TILDE:
                chains[role] = gibbs_probit(
                    data, model.cov_tilde, t, stream(role), "tilde", model.j, burnin
                )
            elif role == ROLE_NULL_CONDITIONAL:
                chains[role] = gibbs_probit(
                    data,
                    model.cov_psi_given_theta,
                    t,
                    stream(role),
                    "null_conditional",
                    model.j,
                    burnin,
                )
            elif role == ROLE_NULL_MODEL:
                chains[role] = gibbs_probit(
                    data_null, model.cov_null, t, stream(role), "full", None, burnin
                )
            else:
                raise ParameterError(f"unknown chain role {role}")
        return chains[role]

    mle_cache = {}

    def mle(which: str):
        if which not in mle_cache:
            mle_cache[which] = probit_mle(data if which == "full" else data_null)
        return mle_cache[which]

    cells = []
    for method in methods:
        cell = CellResult(method=method, replica=replica, seed=seed, iters=t, burnin=burnin)
        try:
            if method == "mr":
                est = estimate_mr(chain(ROLE_TILDE), chain(ROLE_FULL), problem)
                recip, se_recip = ratio_reciprocal_with_se(chain(ROLE_TILDE), problem)
                report = coherence_diagnostic(
                    est.ratio_term, est.se_ratio, recip, se_recip
                )
                cell.bf_estimate = est.estimate
                cell.log_bf = est.log_estimate
                cell.rb_term = est.rao_blackwell_term
                cell.ratio_term = est.ratio_term
                cell.coherence_stat = report.statistic
            elif method == "vw":
                est = estimate_vw(chain(ROLE_FULL), chain(ROLE_NULL_CONDITIONAL), problem)
                cell.bf_estimate = est.estimate
                cell.log_bf = est.log_estimate
                cell.rb_term = est.rao_blackwell_term
                cell.ratio_term = est.ratio_term
            elif method == "chib":
                log_m1 = chib_evidence(data, model.cov_full, chain(ROLE_FULL), join=model.join)
                log_m0 = chib_evidence(data_null, model.cov_null, chain(ROLE_NULL_MODEL))
                cell.log_bf = log_m0 - log_m1
                cell.bf_estimate = float(np.exp(cell.log_bf))
            elif method == "is":
                log_m1 = is_evidence(data, model.cov_full, t, stream(ROLE_IS_FULL), mle("full"))
                log_m0 = is_evidence(
                    data_null, model.cov_null, t, stream(ROLE_IS_NULL), mle("null")
                )
                cell.log_bf = log_m0 - log_m1
                cell.bf_estimate = float(np.exp(cell.log_bf))
            elif method == "bridge":
                beta_hat, sigma_hat = mle("full")
                q_cond = mle_conditional_completion(beta_hat, sigma_hat, model.j)
                completed = complete_null_chain(
                    chain(ROLE_NULL_MODEL), q_cond, stream(ROLE_BRIDGE_COMPLETION)
                )
                bf = bridge_bf(
                    data,
                    model.cov_null,
                    model.cov_full,
                    model.j,
                    chain(ROLE_NULL_MODEL),
                    completed,
                    chain(ROLE_FULL),
                    q_cond,
                    model.join,
                )
                cell.bf_estimate = float(bf)
                cell.log_bf = float(np.log(bf))
            else:
                raise ParameterError(f"unknown method {method!r}")
        except SdlabError as exc:
            cell.status = f"failed: {exc}"
        cells.append(cell)
    return cells


def _worker(args):
    (x, y, columns, g, tested_index, t, burnin, seed, replica, methods) = args
    data = ProbitData(x, y, columns)
    started = time.perf_counter()
    cells = _replica_cells(data, g, tested_index, t, burnin, seed, replica, methods)
    return replica, cells, time.perf_counter() - started


def resolve_workers(requested: Optional[int], replicas: int) -> int:
    """Worker-count policy: explicit request, capped by SDLAB_THREADS and replicas."""
    env = os.environ.get("SDLAB_THREADS")
    cap = None
    if env:
        cap = int(env)
        if cap < 1:
            raise ParameterError(f"SDLAB_THREADS must be >= 1, got {cap}")
    if requested is None:
        workers = cap if cap is not None else (os.cpu_count() or 1)
    else:
        workers = requested
        if cap is not None:
            workers = min(workers, cap)
    return max(1, min(workers, replicas))


def run_pima_experiment(
    data: ProbitData,
    t: int = 20000,
    replicas: int = 100,
    seed: int = 42,
    methods: Sequence[str] = METHOD_NAMES,
    burnin: Optional[int] = None,
    g: Optional[float] = None,
    tested_index: Optional[int] = None,
    workers: Optional[int] = None,
    progress=None,
) -> list:
    """Run the replicated estimator comparison; returns sorted CellResults.

    Replica r uses streams derived from (seed, r), so any scheduling over
    workers yields identical rows.  A failed estimator records a failed cell
    and does not abort the experiment.
    """
    if t < 1:
        raise ParameterError(f"iters must be >= 1, got {t}")
    if replicas < 1:
        raise ParameterError(f"replicas must be >= 1, got {replicas}")
    methods = tuple(methods)
    unknown = [m for m in methods if m not in METHOD_NAMES]
    if unknown or not methods:
        raise ParameterError(f"methods must be a nonempty subset of {METHOD_NAMES}, got {methods}")
    nburn = t // 10 if burnin is None else int(burnin)
    if not 0 <= nburn:
        raise ParameterError("burnin must be non-negative")
    nworkers = resolve_workers(workers, replicas)
    if progress is None:
        progress = lambda msg: print(msg, file=sys.stderr, flush=True)

    tasks = [
        (data.X, data.y, data.columns, g, tested_index, t, nburn, seed, r, methods)
        for r in range(1, replicas + 1)
    ]
    all_cells = []
    if nworkers == 1:
        for task in tasks:
            replica, cells, elapsed = _worker(task)
            progress(f"# replica {replica}/{replicas} done in {elapsed * 1000.0:.0f} ms")
            all_cells.extend(cells)
    else:
        with ProcessPoolExecutor(max_workers=nworkers) as pool:
            for replica, cells, elapsed in pool.map(_worker, tasks):
                progress(f"# replica {replica}/{replicas} done in {elapsed * 1000.0:.0f} ms")
                all_cells.extend(cells)
    all_cells.sort(key=lambda c: (c.method, c.replica))
    return all_cells
