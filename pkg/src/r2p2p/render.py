"""Text renderings of ordered search results."""
from __future__ import annotations

from typing import Iterable

from .queryengine import SearchResult
from .relevance import decode_descriptor, decode_level

_LINE_ESCAPES = str.maketrans({"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"})


def _field(text: str) -> str:
    return text.translate(_LINE_ESCAPES)


def format_lines(results: Iterable[SearchResult]) -> str:
    """One ``rank\\tid\\tcitations\\tlevel\\tdescriptor\\ttitle`` line per result.

    Unrated documents show ``-`` in the three rating columns.  Tabs,
    newlines and backslashes inside fields are backslash-escaped.
    """
    out = []
    for rank, result in enumerate(results, 1):
        adv = result.advertisement
        rating = adv.rating
        cols = (
            ("-", "-", "-")
            if rating is None
            else (str(rating.citations), rating.level, rating.descriptor)
        )
        out.append("\t".join((str(rank), _field(adv.id)) + cols + (_field(adv.title),)) + "\n")
    return "".join(out)


def format_human(results: Iterable[SearchResult]) -> str:
    out = []
    for rank, result in enumerate(results, 1):
        adv = result.advertisement
        if adv.rating is None:
            rating = "unrated"
        else:
            r = adv.rating
            rating = "%s for %s, %d citations" % (
                decode_descriptor(r.descriptor).value,
                decode_level(r.level).value,
                r.citations,
            )
        out.append("%2d. %s  [%s]\n" % (rank, adv.title, rating))
        out.append("    %s  rev %d  from %s\n" % (adv.id, adv.revision, ", ".join(sorted(map(str, result.sources)))))
    return "".join(out)
