"""Writes the synthetic fixture corpus in fixtures/corpus/.

Six days around the 2017-11-07 limit change, one shard per day in assorted
container formats. Intended lengths are log-normal; drafts over the day's
limit are either trimmed to just under it or abandoned, so the histograms
show a spike at the limit. The stream also carries the records that ingest
must drop: deletes, retweets, unlisted clients, unlisted languages and
malformed lines.

Run from the repository root: python3 fixtures/generate_corpus.py
"""

import bz2
import datetime as dt
import gzip
import io
import json
import math
import random
import tarfile
from pathlib import Path

SEED = 20171107
OUT = Path(__file__).resolve().parent / "corpus"
SWITCH = dt.date(2017, 11, 7)
DAYS = [dt.date(2017, 11, d) for d in range(4, 10)]

WORDS = (
    "the a to of and in is it you that for on was with be at this have from "
    "work job office meeting deadline love happy sad adorable hate friend family "
    "talk we day night today time new good great really just now people think "
    "know want see city music game team news coffee weekend morning plan idea"
).split()
KANA = "あいうえおかきくけこさしすせそたちつてとなにぬねのはひふへほまみむめもやゆよらりるれろわをん"
WEB = ["Twitter Web Client", "Twitter Web App", "Mobile Web (M2)"]
MOBILE = ["Twitter for iPhone", "Twitter for Android", "Twitter for iPad", "Twitter Lite"]
LANGS = [("en", 0.6, 3.9), ("es", 0.15, 3.8), ("ja", 0.25, 3.3)]


def latin_text(rng, n):
    words = []
    size = 0
    while size < n:
        w = rng.choice(WORDS)
        words.append(w)
        size += len(w) + 1
    text = " ".join(words)[:n]
    if text.endswith(" "):
        text = text[:-1] + "x"
    return text


def kana_text(rng, n):
    return "".join(rng.choice(KANA) for _ in range(n))


def draft_length(rng, mu, limit):
    """Characters in the emitted text, or None if the draft is abandoned."""
    while True:
        x = int(round(math.exp(rng.gauss(mu, 0.9))))
        if x >= 1:
            break
    if x <= limit:
        return x
    if rng.random() < 0.3:
        return None
    # trimmed to the limit or a few characters under it
    return limit - min(int(rng.expovariate(0.5)), 10)


def created_at(day, rng):
    t = dt.datetime(day.year, day.month, day.day, rng.randrange(24), rng.randrange(60), rng.randrange(60))
    return t.strftime("%a %b %d %H:%M:%S +0000 %Y")


def source(label):
    return f'<a href="https://example.invalid" rel="nofollow">{label}</a>'


def tweet(rng, day, ident):
    r = rng.random()
    lang, mu = "en", 3.9
    acc = 0.0
    for code, share, m in LANGS:
        acc += share
        if r < acc:
            lang, mu = code, m
            break
    mobile = rng.random() < 0.5
    label = rng.choice(MOBILE if mobile else WEB)
    # characters allowed: CJK code points weigh 2 after the switch
    limit = 280 if day >= SWITCH and lang != "ja" else 140
    n = draft_length(rng, mu, limit)
    if n is None:
        return None
    text = kana_text(rng, n) if lang == "ja" else latin_text(rng, n)
    if lang != "ja" and n >= 8 and rng.random() < 0.03:
        i = rng.randint(1, 4)
        marker = f" {i}/{rng.randint(i, 5)}"
        text = text[: n - len(marker)] + marker
    if lang != "ja" and n >= 6 and rng.random() < 0.02:
        text = text[: n - 2] + " \U0001F44D"
    obj = {
        "created_at": created_at(day, rng),
        "id": ident,
        "id_str": str(ident),
        "lang": lang,
        "source": source(label),
    }
    if rng.random() < 0.1:
        # hidden reply prefix outside the display range
        prefix = "@someone "
        obj["text"] = prefix + text
        obj["display_text_range"] = [len(prefix), len(prefix) + len(text)]
    elif len(text) > 140:
        obj["text"] = text[:139] + "…"
        obj["truncated"] = True
        obj["extended_tweet"] = {"full_text": text, "display_text_range": [0, len(text)]}
    else:
        obj["text"] = text
    return obj


def noise(rng, day, ident):
    kind = rng.choice(["delete", "retweet", "bot", "lang", "broken"])
    if kind == "delete":
        return json.dumps({"delete": {"status": {"id": ident}, "timestamp_ms": "1509900000000"}})
    base = {
        "created_at": created_at(day, rng),
        "id": ident,
        "text": latin_text(rng, 40),
        "lang": "en",
        "source": source("Twitter for iPhone"),
    }
    if kind == "retweet":
        base["retweeted_status"] = {"id": ident - 1}
    elif kind == "bot":
        base["source"] = source("IFTTT")
    elif kind == "lang":
        base["lang"] = "und"
    else:
        return json.dumps(base)[:-9]
    return json.dumps(base, ensure_ascii=False)


def day_lines(rng, day, per_day=1200):
    lines = []
    ident = int(day.strftime("%Y%m%d")) * 100000
    while len(lines) < per_day:
        ident += 1
        if rng.random() < 0.05:
            lines.append(noise(rng, day, ident))
            continue
        obj = tweet(rng, day, ident)
        if obj is not None:
            lines.append(json.dumps(obj, ensure_ascii=False))
    return ("\n".join(lines) + "\n").encode("utf-8")


def write_tar(path, members):
    buf = io.BytesIO()
    with tarfile.open(fileobj=buf, mode="w", format=tarfile.USTAR_FORMAT) as tar:
        for name, data in members:
            info = tarfile.TarInfo(name)
            info.size = len(data)
            info.mtime = 0
            tar.addfile(info, io.BytesIO(data))
    path.write_bytes(gzip.compress(buf.getvalue(), mtime=0))


def main():
    rng = random.Random(SEED)
    OUT.mkdir(parents=True, exist_ok=True)
    for old in OUT.iterdir():
        old.unlink()
    data = {day: day_lines(rng, day) for day in DAYS}
    stem = lambda d: d.strftime("%Y-%m-%d")
    (OUT / f"{stem(DAYS[0])}.json").write_bytes(data[DAYS[0]])
    (OUT / f"{stem(DAYS[1])}.json.gz").write_bytes(gzip.compress(data[DAYS[1]], mtime=0))
    (OUT / f"{stem(DAYS[2])}.json.bz2").write_bytes(bz2.compress(data[DAYS[2]]))
    half = data[DAYS[3]].split(b"\n")
    mid = len(half) // 2
    write_tar(
        OUT / f"{stem(DAYS[3])}.tar.gz",
        [("part-0.json", b"\n".join(half[:mid]) + b"\n"), ("part-1.json", b"\n".join(half[mid:]))],
    )
    (OUT / f"{stem(DAYS[4])}.json.gz").write_bytes(gzip.compress(data[DAYS[4]], mtime=0))
    (OUT / f"{stem(DAYS[5])}.json").write_bytes(data[DAYS[5]])


if __name__ == "__main__":
    main()
