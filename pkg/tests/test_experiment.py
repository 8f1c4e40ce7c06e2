import math

import pytest

import sdlab.experiment as experiment
from sdlab.errors import ParameterError, SdlabError
from sdlab.experiment import (
    CellResult,
    METHOD_NAMES,
    resolve_workers,
    rows_to_csv,
    rows_to_json,
    run_pima_experiment,
)
from sdlab.probit import load_pima


def quiet(_msg):
    pass


class TestRunShape:
    def test_single_method_single_replica(self):
        data = load_pima()
        cells = run_pima_experiment(
            data, t=300, replicas=1, seed=7, methods=("mr",), burnin=30, workers=1, progress=quiet
        )
        assert len(cells) == 1
        cell = cells[0]
        assert cell.method == "mr" and cell.replica == 1 and cell.status == "ok"
        assert cell.bf_estimate > 0
        assert cell.coherence_stat is not None

    def test_full_grid_sorted(self):
        data = load_pima()
        cells = run_pima_experiment(
            data, t=300, replicas=2, seed=7, methods=METHOD_NAMES, burnin=30, workers=1,
            progress=quiet,
        )
        assert len(cells) == 10
        keys = [(c.method, c.replica) for c in cells]
        assert keys == sorted(keys)
        assert {c.method for c in cells} == set(METHOD_NAMES)

    def test_metadata_recorded(self):
        data = load_pima()
        (cell,) = run_pima_experiment(
            data, t=200, replicas=1, seed=99, methods=("chib",), burnin=20, workers=1,
            progress=quiet,
        )
        assert (cell.seed, cell.iters, cell.burnin) == (99, 200, 20)
        assert cell.log_bf == pytest.approx(math.log(cell.bf_estimate))

    def test_argument_validation(self):
        data = load_pima()
        with pytest.raises(ParameterError):
            run_pima_experiment(data, t=0, replicas=1, progress=quiet)
        with pytest.raises(ParameterError):
            run_pima_experiment(data, t=10, replicas=0, progress=quiet)
        with pytest.raises(ParameterError):
            run_pima_experiment(data, t=10, replicas=1, methods=("mcmc",), progress=quiet)
        with pytest.raises(ParameterError):
            run_pima_experiment(data, t=10, replicas=1, methods=(), progress=quiet)


class TestDeterminism:
    def test_serial_vs_parallel_bytes(self):
        data = load_pima()
        kwargs = dict(t=250, replicas=3, seed=11, methods=("mr", "chib"), burnin=25,
                      progress=quiet)
        serial = run_pima_experiment(data, workers=1, **kwargs)
        parallel = run_pima_experiment(data, workers=2, **kwargs)
        assert rows_to_csv(serial) == rows_to_csv(parallel)
        assert rows_to_json(serial) == rows_to_json(parallel)

    def test_replica_prefix_property(self):
        # replicas derive their own streams, so a shorter run is a prefix
        data = load_pima()
        kwargs = dict(t=200, burnin=20, seed=13, methods=("vw",), workers=1, progress=quiet)
        two = run_pima_experiment(data, replicas=2, **kwargs)
        three = run_pima_experiment(data, replicas=3, **kwargs)
        assert rows_to_csv(three).startswith(rows_to_csv(two).rstrip("\n")[: len(rows_to_csv(two)) - 1])
        assert [c.bf_estimate for c in three[:2]] == [c.bf_estimate for c in two]


class TestFailureHandling:
    def test_failed_cell_recorded_not_fatal(self, monkeypatch):
        data = load_pima()

        def boom(*args, **kwargs):
            raise SdlabError("synthetic failure")

        monkeypatch.setattr(experiment, "estimate_mr", boom)
        cells = run_pima_experiment(
            data, t=200, replicas=1, seed=5, methods=("mr", "chib"), burnin=20, workers=1,
            progress=quiet,
        )
        by_method = {c.method: c for c in cells}
        assert by_method["mr"].status.startswith("failed:")
        assert by_method["mr"].bf_estimate is None
        assert by_method["chib"].status == "ok"


class TestCsvFormat:
    def test_header_and_empty_fields(self):
        rows = [
            CellResult(
                method="mr", replica=1, seed=42, iters=100, burnin=10,
                bf_estimate=1.25, log_bf=math.log(1.25), rb_term=1.5, ratio_term=1.25 / 1.5,
                coherence_stat=0.5,
            ),
            CellResult(method="chib", replica=2, seed=42, iters=100, burnin=10,
                       status="failed: bad, very bad"),
        ]
        text = rows_to_csv(rows)
        lines = text.strip().split("\n")
        assert lines[0] == (
            "method,replica,seed,iters,burnin,bf_estimate,log_bf,rb_term,ratio_term,"
            "coherence_stat,elapsed_ms,status"
        )
        assert lines[1].startswith("mr,1,42,100,10,1.25,")
        # commas in failure messages are sanitized; no quoting in this format
        assert lines[2] == "chib,2,42,100,10,,,,,,,failed: bad; very bad"
        assert all(line.count(",") == 11 for line in lines[1:])

    def test_seventeen_significant_digits(self):
        value = 1.2345678901234567
        row = CellResult(method="mr", replica=1, seed=1, iters=1, burnin=0, bf_estimate=value)
        assert f"{value:.17g}" in rows_to_csv([row])


class TestWorkers:
    def test_env_caps(self, monkeypatch):
        monkeypatch.setenv("SDLAB_THREADS", "2")
        assert resolve_workers(8, replicas=100) == 2
        assert resolve_workers(None, replicas=100) == 2
        assert resolve_workers(1, replicas=100) == 1

    def test_replica_cap_and_default(self, monkeypatch):
        monkeypatch.delenv("SDLAB_THREADS", raising=False)
        assert resolve_workers(None, replicas=1) == 1
        assert resolve_workers(64, replicas=3) == 3

    def test_invalid_env(self, monkeypatch):
        monkeypatch.setenv("SDLAB_THREADS", "0")
        with pytest.raises(ParameterError):
            resolve_workers(None, replicas=4)
