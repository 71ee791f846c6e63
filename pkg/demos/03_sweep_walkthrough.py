"""An eps-sweep from configuration to verdicts.

Loads a YAML configuration (the quick ``small.yaml`` unless another path
is given), validates it, solves the heterogeneous problem for every eps and
the homogenized problem once, then prints the quantities the sweep judges:
the a priori bound, Picard contraction, and how space-time pairings and
corrector errors approach the homogenized limit.

    python3 demos/03_sweep_walkthrough.py [config.yaml]
"""
import sys
from pathlib import Path

from nfhomog import kernel_mass, load_config, run_sweep, validate

path = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent / "configs" / "small.yaml"
cfg = load_config(path)
problems = validate(cfg)
if problems:
    sys.exit("invalid configuration:\n  " + "\n  ".join(problems))

print(f"{path.name}: M = {cfg.macro.M}, L = {cfg.macro.L}, eps = {cfg.eps}, T = {cfg.time_grid.T}")
kernel, firing = cfg.kernel(), cfg.firing()
mass = max(kernel_mass(kernel, e, cfg.macro) for e in cfg.eps)
print(f"kernel mass {mass:.4f}, firing-rate Lipschitz constant k1 = {firing.k1:.4f}")

res = run_sweep(cfg)

print("\nper eps: total Picard sweeps, max contraction ratio, sup_t(|u|_1 + |u|_2), bound holds")
for e, rep, b in zip(res.eps, res.solve_reports, res.bound_reports):
    print(f"  eps {e:<8g} {sum(rep.sweeps):5d}  {rep.max_ratio:.3f}  {b.sup_l1_plus_l2:.6f}  {b.passed}")

print("\nspace-time pairing errors |<<u_eps, psi^eps>> - <<u0, psi>>|")
for r in res.pairing_reports:
    print(f"  {r.label:12s} " + "  ".join(f"{x:.2e}" for x in r.errors))

print("\ncorrector error ||u_eps - u0(., ./eps)|| in L2(0, T; L2):",
      "  ".join(f"{x:.2e}" for x in res.corrector_l2))
if res.integrator_gaps:
    print("Picard vs RK4 max gap:", "  ".join(f"{x:.1e}" for x in res.integrator_gaps))

print("\nverdicts:")
for k, v in res.verdicts.items():
    print(f"  {k:32s} {'PASS' if v else 'FAIL'}")
