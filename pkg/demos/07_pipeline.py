"""Run every stage from the bundled config and list what was written.

Equivalent to ``dyspill pipeline --fixture -o <dir>``. The manifest records a
SHA-256 per output plus a digest over all of them, so two runs with the same
seed can be compared by that one value.
"""

import json
import sys
import tempfile
from pathlib import Path

from dyspill import load_config
from dyspill.fixtures import fixture_path
from dyspill.pipeline import run_pipeline

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="dyspill-run-"))
root = run_pipeline(load_config(fixture_path("run.cfg"), {"regression.n_boot": "50"}), out)
manifest = json.loads((root / "manifest.json").read_text())

for st in manifest["stages"]:
    print(f"{st['name']:>10}  {st['status']}  {st.get('seconds', '')}")
print(f"\n{len(manifest['outputs'])} files under {root}")
print("outputs digest:", manifest["outputs_digest"])
