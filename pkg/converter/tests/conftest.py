import pytest
from wesad_fixtures import build_archive, dump_archive


@pytest.fixture()
def archive_path(tmp_path):
    return dump_archive(tmp_path / "S2.pkl", build_archive())
