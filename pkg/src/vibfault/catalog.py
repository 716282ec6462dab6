"""Record-name catalogs mapping dataset records to fault classes.

The CWRU catalog covers the 14 drive-end fault classes (ball / inner race /
outer race at 0.007, 0.014 and 0.021 inch plus healthy); the Paderborn
catalog covers the 16 combinations of bearing condition and operating code.
Class indices are 0-based internally; reports add 1 when quoting "Class k".
"""

import fnmatch
from dataclasses import dataclass

from .errors import AmbiguousRecord, UnknownRecord


@dataclass(frozen=True)
class CatalogEntry:
    pattern: str        # glob-style match against record names
    location: str       # fault location or "healthy"
    detail: str         # fault depth (inch) or operating code
    class_index: int    # 0-based
    display_name: str   # name used in reports and CSV headers


@dataclass(frozen=True)
class Catalog:
    name: str
    entries: tuple
    class_count: int

    def __post_init__(self):
        covered = {e.class_index for e in self.entries}
        if covered != set(range(self.class_count)):
            missing = sorted(set(range(self.class_count)) - covered)
            raise ValueError(f"catalog {self.name}: classes without entries: {missing}")
        patterns = [e.pattern for e in self.entries]
        if len(patterns) != len(set(patterns)):
            raise ValueError(f"catalog {self.name}: duplicate record patterns")

    def class_names(self):
        """Display name per class index (first entry wins)."""
        names = [None] * self.class_count
        for e in self.entries:
            if names[e.class_index] is None:
                names[e.class_index] = e.display_name
        return names


def catalog_cwru():
    """14-class CWRU catalog: fault location x depth, plus healthy."""
    rows = [
        ("14_BA", "ball", "0.014"),
        ("14_IR", "inner race", "0.014"),
        ("14_OR1", "outer race", "0.014"),
        ("21_BA", "ball", "0.021"),
        ("21_IR", "inner race", "0.021"),
        ("21_OR1", "outer race", "0.021"),
        ("21_OR2", "outer race", "0.021"),
        ("21_OR3", "outer race", "0.021"),
        ("7_BA", "ball", "0.007"),
        ("7_IR", "inner race", "0.007"),
        ("7_OR1", "outer race", "0.007"),
        ("7_OR2", "outer race", "0.007"),
        ("7_OR3", "outer race", "0.007"),
        ("N", "healthy", "-"),
    ]
    entries = tuple(
        CatalogEntry(pattern=name + "*", location=loc, detail=depth,
                     class_index=i, display_name=name)
        for i, (name, loc, depth) in enumerate(rows)
    )
    return Catalog("cwru", entries, class_count=14)


def catalog_pu():
    """16-class Paderborn catalog: 4 bearing conditions x 4 operating codes."""
    operating_codes = ("N09_M07_F10", "N15_M01_F10", "N15_M07_F04", "N15_M07_F10")
    bearings = (
        ("K001", "healthy"),
        ("KA01", "outer race"),
        ("KB23", "outer race + inner race"),
        ("KI01", "inner race"),
    )
    entries = []
    index = 0
    for code in operating_codes:
        for bearing, location in bearings:
            entries.append(CatalogEntry(
                pattern=f"{code}_{bearing}*",
                location=location,
                detail=code,
                class_index=index,
                display_name=f"{code}_{bearing}_1",
            ))
            index += 1
    return Catalog("pu", tuple(entries), class_count=16)


def label_record(catalog, record_name):
    """Map a record name to its class index.

    Raises UnknownRecord when nothing matches and AmbiguousRecord when the
    name matches more than one catalog pattern.
    """
    hits = [e for e in catalog.entries
            if fnmatch.fnmatchcase(record_name, e.pattern)]
    if not hits:
        raise UnknownRecord(
            f"record {record_name!r} matches no {catalog.name} pattern")
    if len(hits) > 1:
        raise AmbiguousRecord(
            f"record {record_name!r} matches {[e.pattern for e in hits]}")
    return hits[0].class_index
