"""Reading off the derivative order of a black-box time stepper.

Feed the box randomized inputs that vary one coordinate at a time and
watch the output variance: coordinates the box ignores produce (near)
zero variance.  Applied to a one-step simulator whose inputs are local
derivative values D_0..D_m, the highest *flagged* coordinate is the
spatial order of the equation actually being solved -- whatever the
implementation claims to be doing.
"""

import numpy as np

from patchlab import (
    BlackBoxFunction,
    PdeSpec,
    ProbeSpec,
    derivative_blackbox,
    detect_order,
)

probe = ProbeSpec(n_base=8, n_perturb=1024, seed=3)
dt, h = 1e-3, 0.1

cases = [
    ("heat", PdeSpec.heat(1.0), 2),
    ("advection", PdeSpec.advection(1.0), 2),
    ("biharmonic, d_max=4", PdeSpec.biharmonic(1.0), 4),
    ("biharmonic, d_max=2", PdeSpec.biharmonic(1.0), 2),
]

for name, pde, d_max in cases:
    report = detect_order(derivative_blackbox(pde, d_max, dt, h), probe)
    variances = " ".join(f"{v:.2e}" for v in report.variances)
    print(f"{name}")
    print(f"  variance per derivative coordinate: {variances}")
    print(f"  threshold {report.threshold:.2e}  ->  detected order {report.detected_order}")

# The advection case is the interesting one: a first-order equation whose
# one-step map still brushes D_2 at O(dt) through the Taylor propagator.
# At dt = 1e-3 that response sits ~5 orders below the D_1 response and the
# relative threshold ignores it; crank dt up and the probe starts calling
# the same box second order.
print()
print("advection again, growing dt:")
for big_dt in (1e-3, 1e-1, 1.0):
    report = detect_order(derivative_blackbox(PdeSpec.advection(1.0), 2, big_dt, h), probe)
    print(f"  dt = {big_dt:<6g} detected order {report.detected_order}")

print()
print("stop rule vs f(x_1, x_100):")
for stop_after in (5, None):
    report = detect_order(
        BlackBoxFunction(lambda pt: pt[0] + pt[99], arity=100),
        probe,
        stop_after=stop_after,
    )
    rule = f"S = {stop_after}" if stop_after else "exhaustive"
    print(f"  {rule:>10}: detected {report.detected_order:>3}, "
          f"probed {len(report.indices)} coordinates, "
          f"stopped_early = {report.stopped_early}")
print("The cheap stop rule saves 94 coordinate sweeps and reports the wrong")
print("order; only the exhaustive scan finds the x_100 dependence.")
