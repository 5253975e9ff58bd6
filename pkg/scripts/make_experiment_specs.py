"""Write the experiment spec files in experiments/ (one file per table row)."""

import argparse
import json
from pathlib import Path

FRACTIONS = {"90": 0.9, "95": 0.95, "100": 1.0}
NETWORK_CLUSTERS = [[0, 1, 2, 3], [48, 49, 50, 51], [96, 97, 98, 99], [144, 145, 146, 147]]
LANGUAGE_CLUSTERS = [[0, 1, 2, 3], [12, 13, 14, 15], [24, 25, 26, 27]]


def point_cloud_specs():
    for tag, frac in FRACTIONS.items():
        key = {"key_fraction": frac}
        yield {"name": f"power_key{tag}", "kind": "point_cloud", "tests": ["two_sample"], "sigmas": [10.0, 5.0],
               "groups": [{"size": 5, "shape": "uniform"}, {"size": 5, **key}],
               "description": "uniform clouds vs key clouds, 5 vs 5"}
        for place, size in (("fixed", 4), ("random", 5)):
            option = "cycle" if place == "fixed" else "random"
            yield {"name": f"noise_{place}_key{tag}", "kind": "point_cloud", "tests": ["two_sample"],
                   "groups": [{"size": size, **key}, {"size": size, "noise_cycle": option, **key}],
                   "description": f"key vs key with a small noise cycle at {place} anchors"}
            yield {"name": f"location_{place}_key{tag}", "kind": "point_cloud", "tests": ["two_sample"],
                   "groups": [{"size": size, "keyhole_variant": "quarter_TL", **key},
                              {"size": size, "keyhole_variant": option, **key}],
                   "description": f"top-left quarter keyhole vs {place} quarter keyholes"}
        yield {"name": f"anova_power_key{tag}", "kind": "point_cloud", "tests": ["t_anova", "permanova"],
               "sigmas": [10.0, 5.0],
               "groups": [{"size": 5, "shape": "uniform"}, {"size": 5, "shape": "uniform"}, {"size": 5, **key}],
               "description": "two uniform groups and one key group, 5 each"}
        for place, size in (("fixed", 4), ("random", 5)):
            option = "cycle" if place == "fixed" else "random"
            yield {"name": f"anova_noise_{place}_key{tag}", "kind": "point_cloud", "tests": ["t_anova", "permanova"],
                   "groups": [{"size": size, "noise_cycle": option, **key}] * 3,
                   "description": f"three key groups with noise cycles at {place} anchors"}
            yield {"name": f"anova_location_{place}_key{tag}", "kind": "point_cloud",
                   "tests": ["t_anova", "permanova"],
                   "groups": [{"size": size, "keyhole_variant": option, **key}] * 3,
                   "description": f"three groups of {place} quarter keyholes"}


def network_specs():
    for n in (10, 20):
        yield {"name": f"network_null_{n}v{n}", "kind": "network", "n_subjects": n,
               "tests": ["two_sample", "permanova"], "sigmas": [10.0, 5.0], "groups": [{}, {}],
               "description": "two perturbed copies of the same base networks"}
        for k in (3, 4):
            yield {"name": f"network_lesion{k}_{n}v{n}", "kind": "network", "n_subjects": n,
                   "tests": ["two_sample", "permanova"], "sigmas": [10.0, 5.0],
                   "groups": [{}, {"lesion": NETWORK_CLUSTERS[:k]}],
                   "description": f"no lesion vs {k} knocked-out clusters of 4 nodes"}
        yield {"name": f"network_anova_null_{n}", "kind": "network", "n_subjects": n,
               "tests": ["t_anova", "permanova"], "groups": [{}, {}, {}],
               "description": "three perturbed copies of the same base networks"}
        yield {"name": f"network_anova_lesion3_{n}", "kind": "network", "n_subjects": n,
               "tests": ["t_anova", "permanova"], "groups": [{}, {}, {"lesion": NETWORK_CLUSTERS[:3]}],
               "description": "no lesion vs no lesion vs 3 knocked-out clusters"}


def tlsm_specs():
    yield {"name": "tlsm_lesion_10v10", "kind": "tlsm", "n_nodes": 48, "n_subjects": 10, "class_filter": "LK2",
           "tests": ["two_sample"], "groups": [{}, {"lesion": LANGUAGE_CLUSTERS}],
           "description": "LK2 4-polygons, unlesioned vs lesions on frontal, parietal and temporal ROIs"}
    yield {"name": "tlsm_null_10v10", "kind": "tlsm", "n_nodes": 48, "n_subjects": 10, "class_filter": "LK2",
           "tests": ["two_sample"], "groups": [{}, {}],
           "description": "LK2 4-polygons, two perturbed copies of the same networks"}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "experiments"))
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    count = 0
    for spec in [*point_cloud_specs(), *network_specs(), *tlsm_specs()]:
        spec = {"n_replicates": 20, "n_steps": 20000, "seed": 2024, **spec}
        (out / f"{spec['name']}.json").write_text(json.dumps(spec, indent=2, sort_keys=True) + "\n")
        count += 1
    print(f"wrote {count} specs to {out}")


if __name__ == "__main__":
    main()
