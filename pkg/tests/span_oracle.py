"""Brute-force span enumeration used as an independent scorer oracle."""

from evifuse.tags import CATEGORIES, TAGS


def _parts(tag_id):
    tag = TAGS[tag_id]
    return ("O", None) if tag == "O" else tuple(tag.split("-", 1))


def brute_spans(tags):
    """Check every interval [i, j) against the span definition directly."""
    n = len(tags)
    parts = [_parts(t) for t in tags]
    found = set()
    for i in range(n):
        prefix, cat = parts[i]
        if cat is None:
            continue
        continues_previous = prefix == "I" and i > 0 and parts[i - 1][1] == cat
        if continues_previous:
            continue
        for j in range(i + 1, n + 1):
            inner_ok = all(parts[k] == ("I", cat) for k in range(i + 1, j))
            closed = j == n or parts[j] != ("I", cat)
            if inner_ok and closed:
                found.add((i, j, cat))
    return found


def brute_counts(gold, pred):
    counts = {c: [0, 0, 0] for c in CATEGORIES}
    for g, p in zip(gold, pred):
        gs, ps = brute_spans(g), brute_spans(p)
        for s in ps:
            counts[s[2]][1] += 1
        for s in gs:
            counts[s[2]][2] += 1
            if s in ps:
                counts[s[2]][0] += 1
    return counts
