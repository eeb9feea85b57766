#!/usr/bin/env python3
"""Stand-in scorer process: answers every request with a fixed score.

A ref path containing "same" gets 1.0, a gen path containing "crash" ends
the process without answering, anything else gets 0.25.
"""
import json
import sys

for line in sys.stdin:
    req = json.loads(line)
    if "crash" in req["gen"]:
        sys.exit(3)
    score = 1.0 if "same" in req["ref"] else 0.25
    print(json.dumps({"score": score}), flush=True)
