"""Time the hot kernels on the numba path and on the pure-numpy fallback.

Each backend runs in its own interpreter because the switch is read at import.

    python3 benchmarks/bench_kernels.py
"""
import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json, time
from etk import make_system, heom
from etk._accel import USE_NUMBA
from etk.cfkernel import kernel_at

sys_ = make_system(-3.0, 3.0, 1.0, 298.0, 1.0)
kernel_at(0.0, 8, sys_)
heom.propagate(sys_, 8, t_end=0.01)

def best(fn, repeat=3):
    out = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return min(out)

dt = heom.default_dt(sys_, 256)
steps = 2000
res = {
    "numba": USE_NUMBA,
    "continued_fraction_depth4096_s": best(lambda: kernel_at(0.0, 4096, sys_)),
    "rk4_step_depth256_us": 1e6 * best(lambda: heom.propagate(sys_, 256, t_end=steps * dt, dt=dt)) / steps,
}
print(json.dumps(res))
"""


def run(disable):
    env = dict(os.environ, ETK_DISABLE_NUMBA="1" if disable else "0")
    out = subprocess.run([sys.executable, "-c", WORKLOAD], env=env, check=True,
                         capture_output=True, text=True).stdout
    return json.loads(out.strip().splitlines()[-1])


def main():
    fast, slow = run(False), run(True)
    print(f"{'kernel':<36}{'numba':>12}{'numpy':>12}{'speedup':>10}")
    for key in ("continued_fraction_depth4096_s", "rk4_step_depth256_us"):
        print(f"{key:<36}{fast[key]:>12.4g}{slow[key]:>12.4g}{slow[key] / fast[key]:>10.1f}")
    if not fast["numba"]:
        print("note: numba is not importable, both columns ran the numpy path")


if __name__ == "__main__":
    main()
