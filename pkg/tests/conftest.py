import sys
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent
DEMOS = REPO_ROOT / "demos"

sys.path.insert(0, str(Path(__file__).resolve().parent))


def demo_path(name: str) -> Path:
    return DEMOS / name


def demo_text(name: str) -> str:
    return demo_path(name).read_text(encoding="utf-8")
