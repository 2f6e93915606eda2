"""Regenerate the shipped desk-scale corpus under corpus/.

Every instance is seeded, sits inside the exact-oracle caps, and the mix
deliberately includes constructed certification chains so that certified
services (rare in small random traces) are exercised by the regression
report.  Run from the repository root:

    python3 demos/make_corpus.py
"""

from pathlib import Path

from metricserve.instance import (
    certification_chain,
    delay_certification_chain,
    generate,
    serialize_instance,
)

ROOT = Path(__file__).resolve().parent.parent / "corpus"


def main() -> None:
    ROOT.mkdir(exist_ok=True)
    count = 0
    for i in range(20):
        inst = generate(
            seed=1000 + i,
            n_points=4 + i % 7,
            n_requests=3 + i % 7,
            mode="deadline",
        )
        (ROOT / f"deadline_{i:02d}.json").write_text(serialize_instance(inst))
        count += 1
    for i in range(10):
        inst = generate(
            seed=2000 + i,
            n_points=3 + i % 5,
            n_requests=2 + i % 4,
            mode="delay",
        )
        (ROOT / f"delay_{i:02d}.json").write_text(serialize_instance(inst))
        count += 1
    for n_far in (5, 6, 7, 8):
        inst = certification_chain(n_far=n_far)
        (ROOT / f"chain_{n_far}.json").write_text(serialize_instance(inst))
        count += 1
    for i, slope in enumerate((0.5, 0.75)):
        inst = delay_certification_chain(far_slope=slope)
        (ROOT / f"delay_chain_{i}.json").write_text(serialize_instance(inst))
        count += 1
    print(f"wrote {count} instances to {ROOT}")


if __name__ == "__main__":
    main()
