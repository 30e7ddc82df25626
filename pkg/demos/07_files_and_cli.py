"""End-to-end file workflow: write data, run the CLI, read the report back.

The command-line layer is a thin wrapper over the library: `estimate` fits
named estimators to a design/response pair on disk, `simulate` runs a
config-driven replicate comparison, `bench` times estimators on synthetic
data. Matrices travel as headerless CSV or a magic-tagged binary format;
report tables round-trip exactly thanks to shortest round-trip float
formatting.
"""

import tempfile
from pathlib import Path

import numpy as np

from hdridge import cli
from hdridge.matrixio import write_matrix_csv, write_matrix_bin, read_rows_csv

rng = np.random.default_rng(42)
n, p = 60, 200
X = rng.standard_normal((n, p))
beta = rng.standard_normal(p) * 0.2
y = X @ beta + rng.standard_normal(n)

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    write_matrix_csv(tmp / "x.csv", X)
    write_matrix_bin(tmp / "x.bin", X)          # same matrix, binary format
    write_matrix_csv(tmp / "y.csv", y.reshape(-1, 1))

    print("$ hdridge estimate --x x.csv --y y.csv --estimators mml,gcv,mom\n")
    rc = cli.main([
        "estimate",
        "--x", str(tmp / "x.csv"),
        "--y", str(tmp / "y.csv"),
        "--estimators", "mml,gcv,mom",
        "--out", str(tmp / "report.csv"),
    ])
    rows = read_rows_csv(str(tmp / "report.csv"))
    print(f"exit code {rc}, {len(rows)} report rows:")
    for row in rows:
        lam = "-" if row["lambda"] is None else f"{row['lambda']:.2f}"
        s2 = "-" if row["sigma2"] is None else f"{row['sigma2']:.3f}"
        print(f"  {row['method']:>4}: lambda={lam:>9}  sigma2={s2:>7}  "
              f"converged={row['converged']}")

    rc_bin = cli.main([
        "estimate",
        "--x", str(tmp / "x.bin"),
        "--y", str(tmp / "y.csv"),
        "--estimators", "mml",
        "--out", str(tmp / "report_bin.csv"),
    ])
    same = (
        read_rows_csv(str(tmp / "report_bin.csv"))[0]["lambda"]
        == rows[0]["lambda"]
    )
    print(f"\nbinary input gives the identical fit: {same}")

    print("\n$ hdridge simulate --config configs/standard.toml "
          "--replicates 2 --seed 13 --out rows.csv")
    config = Path(__file__).parents[1] / "configs" / "standard.toml"
    cli.main([
        "simulate",
        "--config", str(config),
        "--replicates", "2",
        "--seed", "13",
        "--out", str(tmp / "rows.csv"),
    ])
