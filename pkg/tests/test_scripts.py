import os
import subprocess
import sys

import pytest

SCRIPTS = os.path.join(os.path.dirname(__file__), os.pardir, "scripts")


def run(name, *args):
    out = subprocess.run([sys.executable, os.path.join(SCRIPTS, name), *args],
                         capture_output=True, text=True, timeout=120)
    assert out.returncode == 0, out.stderr
    return out.stdout


def test_analytic_curves_script():
    out = run("analytic_curves.py")
    assert "(0, 3)  (4/5, 1/5)  (1, 0)" in out
    assert "edge-disjoint mincut figure  (0, 12)  (1/2, 0)" in out


def test_network_report_script():
    out = run("network_report.py")
    fig = next(l for l in out.splitlines() if l.startswith("mincut_figure"))
    assert "min-cut  12" in fig and "mmg 2" in fig


@pytest.mark.parametrize("seed", [1])
def test_outage_slopes_script(seed):
    out = run("outage_slopes.py", "--trials", "20000", "--seed", str(seed))
    assert out.count("slope") == 2 and "colored" in out
