import pytest

from ddforms.mesh import generate_mesh

_CACHE = {}


@pytest.fixture(scope="session")
def catalog():
    """Shared mesh factory so per-mesh caches persist across tests."""

    def get(name, size=1, mark="none"):
        key = (name, size, mark)
        if key not in _CACHE:
            _CACHE[key] = generate_mesh(name, size, mark)
        return _CACHE[key]

    return get
