import pytest

from iiorbit import cli, plants


@pytest.fixture(scope="session")
def bundles():
    """All five preset bundles, built once."""
    return {name: plants.make_preset(name) for name in plants.PRESETS}


@pytest.fixture(scope="session")
def lift_artifact(tmp_path_factory):
    """The 200 s pendulum lift run, shared by the tests that grade it."""
    out = tmp_path_factory.mktemp("lift")
    scn = cli.load_scenario("iwp-lift")
    return cli.run_scenario(scn, out)
