import json

import pytest

from ndnlab import topo

# Canonical six-node diamond: C0-R1, R1-R2, R1-R3, R2-R4, R3-R4, R4-P1 with
# delays 1/20/5/20/5/1 ms. The best C0->P1 route crosses R3-R4 (cost 12);
# the R2 detour (cost 42) stays available for multicast.
DIAMOND_DOC = {
    "labels": ["C0", "R1", "R2", "R3", "R4", "P1"],
    "matrix": [
        [None, 1, None, None, None, None],
        [1, None, 20, 5, None, None],
        [None, 20, None, None, 20, None],
        [None, 5, None, None, 5, None],
        [None, None, 20, 5, None, 1],
        [None, None, None, None, 1, None],
    ],
}


@pytest.fixture
def diamond_doc():
    return json.loads(json.dumps(DIAMOND_DOC))


@pytest.fixture
def diamond():
    return topo.parse_adjacency(json.dumps(DIAMOND_DOC))
