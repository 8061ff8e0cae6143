"""Helpers shared by the experiment scripts."""

import argparse
import json
from pathlib import Path

OUT = Path(__file__).resolve().parent / "output"


def parser(doc: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=doc, formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--outdir", type=Path, default=OUT, help="where results are written")
    p.add_argument("--no-plot", action="store_true", help="skip figures even if matplotlib is present")
    return p


def write_json(path: Path, doc):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print("wrote", path)


def pyplot(disabled: bool):
    """matplotlib.pyplot, or None when plotting is off or unavailable."""
    if disabled:
        return None
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not installed; figures skipped")
        return None
    return plt
