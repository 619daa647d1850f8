from pathlib import Path

import pytest

from pipegrade.encoding import default_schema
from pipegrade.ingest import PipeRecord

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def schema():
    return default_schema()


@pytest.fixture(scope="session")
def matrix_dir():
    return FIXTURES / "matrices"


def make_record(**overrides) -> PipeRecord:
    """A fully populated record that passes the default cleaning rules."""
    base = dict(
        pipe_id="925",
        pipe_age_years=30,
        material="Vitrified Clay Pipe",
        diameter_inches=8,
        shape="Circular",
        depth_category="0-10 Feet",
        soil_type="Moderate corrosivity",
        loading="Medium traffic",
        waste_type="Moderately corrosive",
        seismic_zone="Zone 2",
        structural_score=2,
        om_score=2,
        repair_history="Minor maintenance",
        total_length_feet=86.0,
        comprehensive_rating=4,
    )
    base.update(overrides)
    return PipeRecord(**base)
