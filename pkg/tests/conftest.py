import pytest

from flrce.config import DataSpec, ExperimentConfig
from flrce.model import TrainConfig


@pytest.fixture
def small_cfg():
    """Tiny federation that runs in well under a second per strategy."""
    return ExperimentConfig(
        rounds=12,
        num_clients=6,
        clients_per_round=3,
        seed=3,
        train=TrainConfig(0.3, 2, 16),
        hidden_dims=(6,),
        data=DataSpec(classes=3, per_class=30, input_dim=4, spread=0.4),
        alpha=0.5,
    )


_ACCEPTANCE: list[str] = []


@pytest.fixture
def report():
    """Record a one-line verdict for an acceptance criterion and fail the test when it does not hold."""

    def _report(name: str, ok: bool, detail: str = "") -> None:
        line = f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else "")
        _ACCEPTANCE.append(line)
        print(line)
        assert ok, line

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
