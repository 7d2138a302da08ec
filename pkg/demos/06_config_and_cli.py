"""Config files and the `sim` command line.

The same config file drives `sim run`; a `[sweep]` section turns it into a
β sweep for `sim sweep`.  `cli.main` is what the `sim` script calls.

Run:  python demos/06_config_and_cli.py
"""
# %%
import json
import tempfile
from pathlib import Path

from chemotaxis.cli import main
from chemotaxis.experiments import parse_config
from chemotaxis.simulation import read_timeseries

text = """
# inverse sensitivity, square-root production
[grid]
nx = 32
ny = 32
[model]
sensitivity = inverse
chi = 200
production = power_shift
beta = 0.5
[init]
u_bar = 5
sigma = 1
seed = 3
[control]
t_end = 0.01
"""

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    cfg_path = tmp / "demo.cfg"
    cfg_path.write_text(text)
    print(parse_config(cfg_path).params.describe())

    # %% equivalent to: sim run demo.cfg --dump-fields 0,0.005 --out out
    rc = main(["run", str(cfg_path), "--dump-fields", "0,0.005", "--out", str(tmp / "out")])
    print("exit code", rc, "->", sorted(p.name for p in (tmp / "out").iterdir()))
    info = json.loads((tmp / "out" / "outcome.json").read_text())
    print("variant:", info["variant"], " final max u:", info["final"]["max_u"])
    ts = read_timeseries(tmp / "out" / "timeseries.csv")
    print(len(ts), "diagnostic samples")

    # %% configuration mistakes exit with code 1 and name the line
    (tmp / "bad.cfg").write_text("[model]\nbeta = 0.5\ngamma = 2\n")
    print("bad config exit code:", main(["run", str(tmp / "bad.cfg")]))
