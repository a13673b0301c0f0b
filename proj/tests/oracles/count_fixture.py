#!/usr/bin/env python3
"""Independent line scan of an NDJSON community dump.

Prints retained/dropped tallies so expected values in the C++ tests can be
frozen from something other than the ingest code itself.
"""
import json
import sys

SENTINELS = {"[deleted]", "[removed]"}


def strip(v, prefix):
    return v[len(prefix):] if v.startswith(prefix) else v


def main(path):
    posts, comments = {}, {}
    tally = {"malformed": 0, "sentinel": 0, "duplicate": 0, "empty": 0, "orphan": 0}
    total = 0
    for line in open(path, encoding="utf-8"):
        if not line.strip():
            continue
        total += 1
        try:
            r = json.loads(line)
        except ValueError:
            tally["malformed"] += 1
            continue
        if r.get("kind") == "post":
            fields = [r.get("id"), r.get("author"), r.get("title"), r.get("selftext") or r.get("body")]
            if any(f in SENTINELS for f in fields):
                tally["sentinel"] += 1
            elif r["id"] in posts:
                tally["duplicate"] += 1
            else:
                posts[r["id"]] = r
        else:
            fields = [r.get("id"), r.get("author"), r.get("body")]
            if any(f in SENTINELS for f in fields):
                tally["sentinel"] += 1
            elif r["id"] in comments:
                tally["duplicate"] += 1
            else:
                comments[r["id"]] = r

    def alive(cid, seen=()):
        c = comments.get(cid)
        if c is None or cid in seen:
            return False
        pid = strip(c["link_id"], "t3_")
        if pid not in posts:
            return False
        parent = c.get("parent_id") or ""
        if parent.startswith("t3_") or not parent:
            return True
        parent = strip(parent, "t1_")
        pc = comments.get(parent)
        if pc is None or strip(pc["link_id"], "t3_") != pid:
            return False
        return alive(parent, seen + (cid,))

    kept = [cid for cid in comments if alive(cid)]
    tally["orphan"] = len(comments) - len(kept)
    print(json.dumps({"total": total, "posts": len(posts), "comments": len(kept), "dropped": tally},
                     sort_keys=True))


if __name__ == "__main__":
    main(sys.argv[1])
