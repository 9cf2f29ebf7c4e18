from twistcoh.schemas.common import Report, StrictSchema


class ProductEntry(StrictSchema):
    left: tuple[int, int]
    right: tuple[int, int]
    coords: list[str]


class ExtReport(Report):
    source: str
    target: str
    twist: str
    t: int
    degrees: list[int]
    dims: list[int]


class HochschildReport(Report):
    algebra: str
    twist: str
    t: int
    method: str
    degrees: list[int]
    dims: list[int]
    products: list[ProductEntry] = []  # noqa: RUF012
    associative: bool | None = None


class StrongCheckReport(Report):
    algebra: str
    twist: str
    t: int
    degree: int
    n: int
    strong: bool
    bar_criterion: bool | None = None
    bar_skipped: str | None = None
