"""Smoke test for the vlcpl extension module.

Build with `maturin develop -m crates/python/Cargo.toml` (or copy the built
cdylib next to this script as vlcpl.so) and run `python python/smoke_test.py`.
"""

import json
import math

import vlcpl


def main():
    night = vlcpl.ChannelParams.preset("night")
    assert abs(night.far_field_power(10.0) + 44.975) < 1e-4
    assert abs(vlcpl.lambertian_order(math.radians(60)) - 1.0) < 1e-12
    assert abs(vlcpl.voltage_to_power_dbw(1.0, 0.0) + 21.76) < 1e-12

    times, powers, meta_json = vlcpl.simulate_passby(night, noise_sigma_db=0.0, seed=1)
    meta = json.loads(meta_json)
    assert len(times) == 1000 and meta["rng"] == "ChaCha20"

    geometry = meta["geometry"]
    ranges, distances, kept = vlcpl.transform(
        times, powers, geometry["lateral_offset_m"], geometry["speed_mps"], geometry["peak_range_m"]
    )
    report = vlcpl.fit(distances, kept, geometry["lateral_offset_m"], correction=True)
    assert abs(report.gamma_hat - night.gamma) < 1e-6, report
    assert abs(report.k_db_hat - night.k_db) < 1e-6, report

    try:
        vlcpl.ChannelParams.preset("noon")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown preset accepted")

    print("smoke test ok:", report)


if __name__ == "__main__":
    main()
