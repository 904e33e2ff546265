"""The command-line tool, driven from Python.

Every artifact records the configuration that produced it, so passing an
artifact back through --config repeats the run byte for byte.
"""

import json
import tempfile
from pathlib import Path

import numpy as np

from rrmkrr.cli import main

work = Path(tempfile.mkdtemp())
rng = np.random.default_rng(6)
X = rng.uniform(size=(20, 1))
Y = np.column_stack([np.sin(5 * X[:, 0]), 2 * np.sin(5 * X[:, 0]), np.cos(2 * X[:, 0])])
Y += 0.05 * rng.standard_normal(Y.shape)
np.savetxt(work / "train.csv", np.column_stack([X, Y]), delimiter=",", header="x1,y1,y2,y3",
           comments="", fmt="%.17g")
np.savetxt(work / "new.csv", np.linspace(0, 1, 5), header="x1", comments="", fmt="%.17g")

main(["fit", "--train", str(work / "train.csv"), "--method", "hard_rank", "--r1", "2",
      "--lambda", "1e-5", "--out", str(work / "model.json")])
main(["predict", "--model", str(work / "model.json"), "--input", str(work / "new.csv"),
      "--out", str(work / "pred.csv")])
print((work / "pred.csv").read_text())

before = (work / "model.json").read_bytes()
main(["fit", "--config", str(work / "model.json")])
print("re-run identical:", before == (work / "model.json").read_bytes())
print("recorded config:", json.loads(before)["provenance"]["config"])
