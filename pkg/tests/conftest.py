"""Shared fixtures/helpers: tiny synthetic CSV files in the dataset schemas."""

from ual_lab.rng import derive_rng

CONCRETE_HEADER = (
    "cement,slag,flyash,water,superplasticizer,coarseaggregate,fineaggregate,age,csMPa"
)


FACEBOOK_HEADER = (
    "Page total likes;Type;Category;Post Month;Post Weekday;Post Hour;Paid;"
    "Total Interactions"
)


def write_concrete_csv(path, n_rows=30, seed=0):
    rng = derive_rng(80, seed)
    lines = [CONCRETE_HEADER]
    for _ in range(n_rows):
        row = rng.uniform(0, 100, 8)
        target = row[:3].sum() + rng.standard_normal()
        lines.append(",".join(f"{v:.3f}" for v in row) + f",{target:.3f}")
    path.write_text("\n".join(lines) + "\n")


def write_facebook_csv(path, n_rows=30, seed=0):
    rng = derive_rng(83, seed)
    kinds = ("Photo", "Status", "Video")
    lines = [FACEBOOK_HEADER]
    for _ in range(n_rows):
        likes = int(rng.integers(500, 5000))
        kind = kinds[int(rng.integers(3))]
        cat = int(rng.integers(1, 4))
        month = int(rng.integers(1, 13))
        weekday = int(rng.integers(1, 8))
        hour = int(rng.integers(0, 24))
        paid = int(rng.integers(0, 2))
        total = likes * 0.01 + 20.0 * paid + rng.standard_normal() * 5.0
        lines.append(f"{likes};{kind};{cat};{month};{weekday};{hour};{paid};{total:.2f}")
    path.write_text("\n".join(lines) + "\n")
