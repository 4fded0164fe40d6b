"""Record first-run regression constants.

The inequality constants this library estimates have no published numeric
values; the suites therefore gate them against values recorded on the
first verified run.  This maintenance tool reruns the suites with no
bounds applied, extracts the constants, and rewrites the packaged
``data/frozen_bounds.json``.  Run it only to re-baseline after a
deliberate change:

    python -m nilheat.freeze configs/h1.json configs/noniso.json
"""

from __future__ import annotations

import json
import pathlib
import sys

from .suites import RunConfig, config_from_dict, run_suite

_EXTRACTORS = {
    "distance": lambda r: {
        "ratio_min": r.stats["equivalence"]["ratio_min"],
        "ratio_max": r.stats["equivalence"]["ratio_max"],
    },
    "kernel": lambda r: {
        "comparison_ratio_min": r.stats["comparison"]["ratio_min"],
        "comparison_ratio_max": r.stats["comparison"]["ratio_max"],
        "log_gradient_constant": r.stats["log_gradient_constant"],
        "t_log_derivative_constant": r.stats["t_log_derivative_constant"],
    },
    "polar": lambda r: {
        "jacobian_ratio_min": r.stats["jacobian_ratio_min"],
        "jacobian_ratio_max": r.stats["jacobian_ratio_max"],
        "pj_ratio_min": r.stats["pj_ratio_min"],
        "pj_ratio_max": r.stats["pj_ratio_max"],
    },
    "lemma6": lambda r: {"sup_ratio": r.stats["sup_ratio"]},
    "cheeger": lambda r: {
        "global": r.stats["global"],
        "ball": r.stats["ball"],
        "complement": r.stats["complement"],
    },
    "li": lambda r: {"constant": r.stats["gradient_bound"]["constant"]},
    "lse-poe": lambda r: {
        "entropy_constant": r.stats["entropy_constant"],
        "variance_constant": r.stats["variance_constant"],
    },
}


def freeze_config(cfg: RunConfig) -> dict:
    out = {}
    for name in cfg.suites:
        rep = run_suite(name, cfg)
        if not rep.passed:
            raise RuntimeError(
                f"suite {name} did not pass on the baseline run; refusing to freeze"
            )
        out[name] = _EXTRACTORS[name](rep)
        print(f"froze {cfg.group.label()}/{name}: {out[name]}")
    return out


def main(argv=None) -> int:
    paths = argv if argv is not None else sys.argv[1:]
    if not paths:
        print("usage: python -m nilheat.freeze CONFIG [CONFIG ...]", file=sys.stderr)
        return 2
    table = {}
    target = pathlib.Path(__file__).parent / "data" / "frozen_bounds.json"
    if target.exists():
        table = json.loads(target.read_text())
    for path in paths:
        with open(path) as fh:
            cfg = config_from_dict(json.load(fh))
        table.setdefault(cfg.group.label(), {}).update(freeze_config(cfg))
    target.write_text(json.dumps(table, sort_keys=True, indent=2) + "\n")
    print(f"wrote {target}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
