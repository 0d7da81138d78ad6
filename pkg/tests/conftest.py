import pytest

from ratbench.models import ModelSet, builtin_model, fit_model, load_table_cells
from ratbench.records import AggregateCell, Sentinel


@pytest.fixture(scope="session")
def models() -> ModelSet:
    return builtin_model()


@pytest.fixture(scope="session")
def table_cells():
    return load_table_cells()


def build_model_with(table_cells, pdr_overrides=None, eb_scale=1.0) -> ModelSet:
    """ModelSet refit from the shipped table with per-cell PDR overrides
    (keyed (tech, bucket, scenario_key), percent) and/or all energies scaled."""
    pdr_overrides = pdr_overrides or {}
    cells = []
    for c in table_cells:
        key = (c.technology, c.bucket, c.scenario.key)
        pdr = pdr_overrides.get(key, c.pdr_pct)
        eb = c.eb_uwh_per_byte
        if not isinstance(eb, Sentinel):
            eb = eb * eb_scale
        cells.append(
            AggregateCell(
                technology=c.technology,
                bucket=c.bucket,
                scenario=c.scenario,
                pdr_pct=pdr,
                eb_uwh_per_byte=eb,
                n_sent=c.n_sent,
                n_received=c.n_received,
            )
        )
    return fit_model(cells)
