import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cutlab import lab  # noqa: E402
from cutlab.instgen import GenConfig, worked_example_2d  # noqa: E402

# Reduced-size set-cover study shared by the end-to-end checks.
STUDY_CONFIG = GenConfig("set_cover", seed=0, count=6000, elements=15, sets=25)
STUDY_KEEP = 400


@pytest.fixture
def example():
    return worked_example_2d()


def build_study(out_dir: Path) -> dict:
    """generate + label into ``out_dir``; returns paths and elapsed seconds."""
    t0 = time.perf_counter()
    lab.cmd_generate(STUDY_CONFIG, out_dir, keep=STUDY_KEEP)
    lab.cmd_label(out_dir / "instances.jsonl", out_dir / "labeled.jsonl")
    return {"dir": out_dir, "labeled": out_dir / "labeled.jsonl", "seconds": time.perf_counter() - t0}


@pytest.fixture(scope="session")
def study(tmp_path_factory):
    return build_study(tmp_path_factory.mktemp("study"))
