import sys
from pathlib import Path

import pytest

# tests import shared oracles as a plain module
sys.path.insert(0, str(Path(__file__).parent))

REPO_ROOT = Path(__file__).resolve().parents[1]
CORA_DIR = REPO_ROOT / "data" / "cora"


@pytest.fixture(scope="session")
def cora():
    from graphleak.graphdata import load_graph

    if not (CORA_DIR / "cora.content").exists():
        pytest.skip("Cora raw files not present under data/cora")
    return load_graph(str(CORA_DIR), format="planetoid_raw")
