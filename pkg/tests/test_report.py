"""Report rendering: figures land next to the sweep CSVs."""

import csv

from moonlab import cli


def test_report_writes_csv_and_figures(tmp_path):
    outdir = tmp_path / "report"
    rc = cli.main(
        [
            "report", "--model", "global-ccf", "--n", "3", "--m-list", "1,2",
            "--samples", "5000", "--seed", "1", "--p-list", "0,0.5,1",
            "--outdir", str(outdir),
        ]
    )
    assert rc == 0
    names = sorted(p.name for p in outdir.iterdir())
    assert names == [
        "density_global-ccf.png",
        "relative_global-ccf.png",
        "reliability_global-ccf.png",
        "sweep_global-ccf_1oo3.csv",
        "sweep_global-ccf_2oo3.csv",
    ]
    for png in outdir.glob("*.png"):
        assert png.stat().st_size > 10_000  # a real rendered image, not a stub
    with open(outdir / "sweep_global-ccf_2oo3.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [float(r["p"]) for r in rows] == [0.0, 0.5, 1.0]


def test_report_rejects_bad_m_list(tmp_path, capsys):
    rc = cli.main(
        ["report", "--model", "linear", "--n", "3", "--m-list", "0,2", "--outdir", str(tmp_path)]
    )
    assert rc == 2
