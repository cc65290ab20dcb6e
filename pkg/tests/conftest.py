import numpy as np
import pytest

from cesdoa.geometry import SourceScenario


def paper_scenario(snr1_db: float = 15.0, snr2_db: float = 10.0) -> SourceScenario:
    """Two correlated sources at nu=(-0.1, 0.3), rho=0.3, unit noise power."""
    p1 = 10.0 ** (snr1_db / 10.0)
    p2 = 10.0 ** (snr2_db / 10.0)
    rho = 0.3
    cov = np.array(
        [[p1, rho * np.sqrt(p1 * p2)], [rho * np.sqrt(p1 * p2), p2]], dtype=complex
    )
    return SourceScenario(
        n_sensors=8, frequencies=np.array([-0.1, 0.3]), source_cov=cov, noise_power=1.0
    )


@pytest.fixture
def scenario():
    return paper_scenario()
