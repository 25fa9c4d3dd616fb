import numpy as np
import pytest

from d2dcache import validate
from d2dcache.cli import main


def test_all_suites_pass_and_cli_exit_zero(tmp_path, capsys):
    rc = main(["validate", "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert rc == 0
    assert out.count("[PASS]") == len(validate.ALL_SUITES)
    assert (tmp_path / "validate.json").exists()


def test_corrupted_reuse_coloring_is_caught(monkeypatch):
    """Mutation check: an all-one-color 'reuse' pattern floods every cluster
    with co-channel interference and must trip the SINR-floor suite."""
    import d2dcache.schemes as schemes

    def broken_coloring(grid, K):
        return np.zeros(grid.n_cells, dtype=np.int64)

    monkeypatch.setattr(schemes, "reuse_color", broken_coloring)
    report = validate.suite_sinr_floor(n_real=5)
    assert not report.passed


def test_suite_reports_carry_counts_and_seeds():
    report = validate.suite_log_inequality(n=1000)
    assert report.passed
    assert report.n_checks == 1000
    assert report.seed is not None
