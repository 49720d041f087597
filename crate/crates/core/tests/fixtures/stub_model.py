"""Stand-in fitness model: knows the target and answers like an oracle.

usage: stub_model.py <target ids, comma separated> <registry hash> <registry size>
"""
import json
import sys

target = {int(t) for t in sys.argv[1].split(",")}
registry = sys.argv[2]
size = int(sys.argv[3])

for line in sys.stdin:
    try:
        req = json.loads(line)
    except ValueError:
        print(json.dumps({"id": -1, "error": "malformed request"}), flush=True)
        continue
    rid = req.get("id")
    if req.get("registry") != registry:
        reply = {"id": rid, "error": "registry mismatch"}
    elif req["op"] == "score":
        reply = {"id": rid, "scores": [float(len(set(c) & target)) for c in req["candidates"]]}
    elif req["op"] == "pmap":
        reply = {"id": rid, "pmap": [0.9 if k in target else 0.01 for k in range(size)]}
    else:
        reply = {"id": rid, "error": "unknown op"}
    print(json.dumps(reply), flush=True)
