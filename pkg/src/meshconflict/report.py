# -*- coding: utf-8 -*-

__all__ = ["render_template", "tid_table", "evaluation_table"]

from functools import lru_cache
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from jinja2 import Environment, PackageLoader

from .evaluation import PerformanceRecord


@lru_cache(maxsize=None)
def _get_environment() -> Environment:
    return Environment(
        loader=PackageLoader("meshconflict", "templates"),
        keep_trailing_newline=True,
    )


def render_template(name: str, **context: Any) -> str:
    return _get_environment().get_template(f"{name}.md.j2").render(**context)


def tid_table(
    tids: Mapping[Tuple[str, str], Sequence[int]],
    *,
    topology: str,
    channels: Sequence[int],
    seeds: Sequence[int],
) -> str:
    """Render a scheme by variant table of median TIDs"""
    schemes = sorted({s for s, _ in tids})
    variants = sorted({v for _, v in tids})
    cells: Dict[str, Dict[str, str]] = {s: {} for s in schemes}
    for (scheme, variant), values in tids.items():
        median = float(np.median(values))
        cells[scheme][variant] = (
            str(int(median)) if median.is_integer() else f"{median:.1f}"
        )
    return render_template(
        "tid_table",
        topology=topology,
        channels=list(channels),
        seeds=list(seeds),
        schemes=schemes,
        variants=variants,
        cells=cells,
    )


def evaluation_table(
    records: Sequence[PerformanceRecord],
    *,
    cls: int,
    case: str,
    phy_rate: float,
    seeds: Sequence[int],
    correlation: Optional[float] = None,
) -> str:
    """Render mean aggregate throughput per scheme and variant"""
    grouped: Dict[Tuple[str, str], List[PerformanceRecord]] = {}
    for r in records:
        grouped.setdefault((r.scheme, str(r.variant)), []).append(r)
    rows = [
        dict(
            scheme=scheme,
            variant=variant,
            tid=int(np.median([r.tid for r in group])),
            aggregate=float(np.mean([r.aggregate for r in group])),
        )
        for (scheme, variant), group in sorted(grouped.items())
    ]
    return render_template(
        "evaluation",
        cls=cls,
        case=case,
        phy_rate=phy_rate,
        seeds=list(seeds),
        rows=rows,
        correlation=correlation,
    )
