"""Smoke test for the koopspec Python extension.

Build and install first:

    pip install -e crates/python --no-build-isolation
"""

import cmath
import json
import math
import os
import struct
import sys
import tempfile

import koopspec


def check(cond, msg):
    if not cond:
        print(f"FAIL: {msg}")
        sys.exit(1)
    print(f"ok   {msg}")


def main():
    tones = koopspec.synth_tones([1.0, 0.5], [0.3, 1.1], steps=100_000, seed=1)
    check(len(tones) == 100_000 and not tones.is_real, "synth_tones length")
    check(abs(tones.mean_energy() - 1.25) < 0.05, "mean energy near 1 + 0.25")

    rho = koopspec.autocovariance(tones, 4, 90_000)
    check(abs(rho[0] - tones.mean_energy()) < 0.01, "lag 0 matches mean energy")

    gram = koopspec.build_gram(tones, 4, 1_000)
    check(all(abs(gram[i][j] - gram[j][i].conjugate()) < 1e-12 for i in range(5) for j in range(5)),
          "Gram is Hermitian")

    eig = koopspec.top_eigen(tones, 200, 50_000, 3)
    check(abs(eig["renormalized"][0] - 1.0) < 0.01, "top renormalized eigenvalue")

    scan = koopspec.run_scan(tones, [200, 400], [10_000, 50_000, 90_000], top_k=4)
    kinds = [v["kind"] for v in scan["verdicts"]]
    check(kinds[:2] == ["eigenfrequency", "eigenfrequency"], f"scan verdicts {kinds}")
    energies = [v["energy"] for v in scan["verdicts"][:2]]
    check(abs(energies[0] - 1.0) < 1e-3 and abs(energies[1] - 0.25) < 1e-3, f"energies {energies}")

    freq = koopspec.extract_frequency(scan["final_eigenvectors"][1])
    check(abs(freq["omega"] - 1.1) < 2 * math.pi / (8 * 401), f"omega {freq['omega']:.5f}")

    a = koopspec.yosida(tones, freq["omega_cycles"])
    check(abs(abs(a) ** 2 - 0.25) < 1e-3, "Yosida energy of the second tone")
    w = 0.3 / (2 * math.pi)
    curve = koopspec.yosida_scan(tones, w - 1e-4, w + 1e-4, 21, 50_000)
    peak = max(curve, key=lambda p: abs(p[1]))
    check(abs(peak[0] - w) < 1e-5, "Yosida scan peak")

    rotor = koopspec.simulate_rotor(5_000, burn_in=1_000)
    check(rotor.is_real and len(rotor) == 5_000, repr(rotor))
    lorenz = koopspec.simulate_lorenz63(2_000, burn_in=1_000)
    check(abs(sum(v.real for v in lorenz.values()) / len(lorenz)) < 1e-9, "Lorenz x is centered")

    with tempfile.TemporaryDirectory() as d:
        csv = os.path.join(d, "s.csv")
        with open(csv, "w") as f:
            f.write("t,value\n")
            for t in range(200):
                f.write(f"{t},{math.cos(0.5 * t)}\n")
        s = koopspec.TimeSeries.from_csv(csv)
        check(len(s) == 200 and s.label == "s", "CSV round trip")

        nt, omega = 400, 0.05
        data = [0.5 * math.cos(2 * math.pi * omega * t) for t in range(nt) for _ in range(4)]
        with open(os.path.join(d, "g.bin"), "wb") as f:
            f.write(struct.pack(f"<{len(data)}d", *data))
        header = os.path.join(d, "g.json")
        with open(header, "w") as f:
            json.dump({"nx": 2, "ny": 2, "nt": nt, "dt": 1.0, "layout": "t-major",
                       "dtype": "f64le", "data": "g.bin"}, f)
        m = koopspec.amplitude_map(header, omega)
        check(all(abs(c["abs_a"] - 0.25) < 1e-9 for c in m["cells"]), "amplitude map")

    try:
        koopspec.TimeSeries([], 1.0)
        check(False, "empty series rejected")
    except ValueError:
        check(True, "empty series rejected")

    z = koopspec.TimeSeries([cmath.exp(0.2j * t) for t in range(50)])
    check(abs(z.conj().values()[1] - cmath.exp(-0.2j)) < 1e-15, "conjugate series")
    print("all smoke checks passed")


if __name__ == "__main__":
    main()
