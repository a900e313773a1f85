"""Compare the compiled and pure-Python kernels on representative inputs.

    python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import importlib
import math
import timeit

import numpy as np

from odtq import coherence, core, gate, spectrum


def workloads():
    cs = core.get_species("cs-1064")
    trap = core.RedGaussian(1064e-9, 2.1e-6, core.mK_to_J(1.0))
    deltas = spectrum.differential_trap_frequency(cs, trap)
    hot = spectrum.build_ensemble(cs, trap, 50e-6)
    offsets, weights = spectrum.detuning_distribution(hot, deltas)
    warm = spectrum.ensemble_from_means((3.0, 3.0, 8.0), tail_eps=1e-10)
    rabi = 2 * math.pi * 1e6
    tp = gate.pi_half_duration(rabi)
    seq_rabi = np.array([rabi, 0.0, rabi, 0.0, rabi])
    seq_time = np.array([tp, 4e-3, 2 * tp, 4e-3, tp])
    cfg = coherence.ramsey_config(cs, trap, 15e-6, 2 * math.pi * 1e3)
    s_off, s_w = spectrum.detuning_distribution(cfg.ensemble, cfg.deltas)
    s_det = cfg.base_detuning + s_off
    return {
        f"thermal_infidelity ({offsets.size} groups)":
            lambda k: k.thermal_infidelity(offsets, weights, 2 * math.pi * 1e3),
        f"ramsey_state_sum ({warm.size} states)":
            lambda k: k.ramsey_state_sum(*warm.weights, 20.0, 20.0, 2.3, 5.0, 0.3),
        "bloch_dopri (10 turns)":
            lambda k: k.bloch_dopri(1e5, 3e4, 0.0, 0.0, -1.0, 20 * math.pi / 1e5,
                                    1e-10, 1e-12, 10 ** 6),
        f"sequence_w echo ({s_det.size} groups)":
            lambda k: k.sequence_w(s_det, s_w, seq_rabi, seq_time, 0.0, 0.0, -1.0),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    backends = {"python": importlib.import_module("odtq._kernels_py")}
    try:
        backends["cython"] = importlib.import_module("odtq._kernels")
    except ImportError:
        print("compiled kernels not built; timing the fallback only")
    print(f"{'kernel':44s}" + "".join(f"{name:>12s}" for name in backends)
          + ("     speedup" if len(backends) == 2 else ""))
    for label, fn in workloads().items():
        best = {}
        for name, mod in backends.items():
            timer = timeit.Timer(lambda: fn(mod))
            number, _ = timer.autorange()
            best[name] = min(timer.repeat(args.repeat, number)) / number
        row = f"{label:44s}" + "".join(f"{best[n] * 1e3:10.3f}ms" for n in backends)
        if len(best) == 2:
            row += f"{best['python'] / best['cython']:11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
