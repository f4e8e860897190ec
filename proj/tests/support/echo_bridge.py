#!/usr/bin/env python3
"""Line-delimited JSON provider bridge used by the command backend tests."""
import json
import sys


def answer(request):
    capability = request["capability"]
    texts = request.get("texts", [])
    if texts and texts[0] == "crash":
        sys.exit(3)
    if capability == "langid":
        return "zh" if texts[0].startswith("谄") else "en"
    if capability == "translate":
        return "[" + request["target"] + "] " + texts[0]
    if capability == "align":
        n = min(len(texts[0].split()), len(texts[1].split()))
        return [[i, i] for i in range(n)]
    if capability == "g2p":
        if request["source"] == "xx":
            raise LookupError("no table for xx")
        return list(texts[0].replace(" ", ""))
    raise ValueError(capability)


for line in sys.stdin:
    try:
        reply = {"result": answer(json.loads(line))}
    except LookupError as e:
        reply = {"error": {"code": "UnsupportedLanguage", "message": str(e)}}
    sys.stdout.write(json.dumps(reply, ensure_ascii=False) + "\n")
    sys.stdout.flush()
