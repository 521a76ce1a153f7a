#!/usr/bin/env python3
"""Reference feature extractor for archived fixture pages.

Computes the 22 ternary features for every URL of a corpus from the fixture
directory alone (pages, WHOIS texts, DNS, rank, index and report files) and
the bundled data files. Written from the rule descriptions in docs/ without
sharing code with the C++ extractor; its output is frozen in tests/golden/.

    extract_features.py --fixtures data/fixtures --data data \
        --corpus data/fixtures/corpus.csv > tests/golden/fixture_features.json
"""

import argparse
import csv
import datetime as dt
import ipaddress
import json
import re
import sys
from html.parser import HTMLParser
from pathlib import Path
from urllib.parse import urljoin, urlsplit

FEATURE_IDS = [
    "ip_in_host", "url_length", "shortener", "at_symbol", "double_slash_redirect", "dash_in_domain",
    "subdomain_count", "registration_length", "favicon", "https_token", "request_url_ratio", "anchor_ratio",
    "meta_script_link_ratio", "sfh", "mail_submit", "abnormal_url", "invisible_iframe", "domain_age",
    "dns_record", "traffic_rank", "google_index", "report_listed",
]
MAX_REDIRECTS = 10


# --- bundled data ---------------------------------------------------------------


class SuffixList:
    """publicsuffix.org matching: exception rules win, then the longest rule,
    then the implicit "*" rule."""

    def __init__(self, path):
        self.rules = set()
        self.wildcards = set()
        self.exceptions = set()
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            rule = line.strip().split()[0] if line.strip() else ""
            if not rule or rule.startswith("//"):
                continue
            rule = rule.lower()
            if rule.startswith("!"):
                self.exceptions.add(rule[1:])
            elif rule.startswith("*."):
                self.wildcards.add(rule[2:])
            else:
                self.rules.add(rule)

    def suffix(self, host):
        if not host or is_ip(host):
            return ""
        labels = host.split(".")
        best = 1
        for i in range(len(labels)):
            candidate = ".".join(labels[i:])
            n = len(labels) - i
            if candidate in self.exceptions:
                return ".".join(labels[i + 1:])
            if candidate in self.rules:
                best = max(best, n)
            if i + 1 < len(labels) and ".".join(labels[i + 1:]) in self.wildcards:
                best = max(best, n)
        return ".".join(labels[len(labels) - best:])

    def registered(self, host):
        host = host.rstrip(".")
        suffix = self.suffix(host)
        if not suffix or len(suffix) >= len(host):
            return host
        rest = host[: -len(suffix) - 1].split(".")
        return rest[-1] + "." + suffix

    def labels_before_suffix(self, host):
        host = host.rstrip(".")
        suffix = self.suffix(host)
        if not suffix or len(suffix) >= len(host):
            return 0
        return len(host[: -len(suffix) - 1].split("."))


def read_list(path):
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(line)
    return out


def read_thresholds(path):
    t = {}
    for line in read_list(path):
        key, value = (part.strip() for part in line.split("=", 1))
        if "," in value:
            t[key] = tuple(float(v) for v in value.split(","))
        else:
            t[key] = int(value)
    return t


# --- url helpers -------------------------------------------------------------------


def is_ip(host):
    if host.startswith("[") and host.endswith("]"):
        return True
    try:
        ipaddress.ip_address(host)
        return True
    except ValueError:
        pass
    # dotted forms with hex or short parts, e.g. 0x7f.1
    parts = host.rstrip(".").split(".")
    return 0 < len(parts) <= 4 and all(re.fullmatch(r"\d+|0[xX][0-9a-fA-F]*", p) for p in parts)


def host_of(url):
    if "://" not in url:
        url = "http://" + url
    return (urlsplit(url).hostname or "").rstrip(".")


def strip_www(host):
    return host[4:] if host.startswith("www.") and len(host) > 4 else host


def band(value, low_high):
    low, high = low_high
    if value < low:
        return 1
    if value <= high:
        return 0
    return -1


def ratio(numerator, denominator, low_high):
    return 1 if denominator == 0 else band(numerator / denominator, low_high)


# --- page ----------------------------------------------------------------------------


class Elements(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.elements = []

    def handle_starttag(self, tag, attrs):
        d = {}
        for k, v in attrs:
            d.setdefault(k.lower(), "" if v is None else v)
        self.elements.append((tag.lower(), d))

    handle_startendtag = handle_starttag


def page_features(page_url, html, psl):
    parser = Elements()
    parser.feed(html)
    parser.close()
    elements = parser.elements
    page_domain = psl.registered(host_of(page_url))

    base = page_url
    for name, attrs in elements:
        if name == "base":
            if "href" in attrs:
                joined = urljoin(page_url, attrs["href"].strip())
                if urlsplit(joined).scheme in ("http", "https"):
                    base = joined
            break

    def resolve(ref):
        return urljoin(base, ref.strip())

    def external(ref):
        target = urlsplit(resolve(ref))
        host = (target.hostname or "").rstrip(".")
        return target.scheme in ("http", "https") and bool(host) and psl.registered(host) != page_domain

    objects = external_objects = anchors = unsafe_anchors = links = external_links = 0
    favicon_external = blank_action = mailto_action = external_action = invisible = False
    for name, attrs in elements:
        if name in ("img", "video", "audio", "source", "embed", "object"):
            ref = attrs.get("data" if name == "object" else "src")
            if ref is None or not ref.strip():
                continue
            objects += 1
            external_objects += external(ref)
        elif name == "a":
            anchors += 1
            href = attrs.get("href")
            if href is None or not href.strip() or href.strip().startswith("#"):
                unsafe_anchors += 1
            elif urlsplit(resolve(href)).scheme.lower() == "javascript" or external(href):
                unsafe_anchors += 1
        elif name in ("script", "link", "meta"):
            ref = None
            if name == "script":
                ref = attrs.get("src")
            elif name == "link":
                ref = attrs.get("href")
                if ref is not None and "icon" in attrs.get("rel", "").lower().split() and external(ref):
                    favicon_external = True
            else:
                content = attrs.get("content", "").strip()
                if attrs.get("http-equiv", "").strip().lower() == "refresh":
                    m = re.search(r"url=\s*['\"]?([^'\"]*)", content, re.I)
                    ref = m.group(1).strip() if m else None
                elif re.match(r"(https?:)?//", content, re.I):
                    ref = content
            if ref is None or not ref.strip():
                continue
            links += 1
            external_links += external(ref)
        elif name == "form":
            if "action" not in attrs:
                continue
            action = attrs["action"].strip()
            if not action or action.lower() == "about:blank":
                blank_action = True
            elif action.lower().startswith("mailto:"):
                mailto_action = True
            elif external(action):
                external_action = True
        elif name in ("iframe", "frame"):
            style = re.sub(r"\s", "", attrs.get("style", "").lower())
            if (
                attrs.get("frameborder", "").strip().lower() in ("0", "no")
                or attrs.get("width", "").strip() in ("0", "0px")
                or attrs.get("height", "").strip() in ("0", "0px")
                or any(m in style for m in ("border:0", "border:none", "display:none", "visibility:hidden",
                                            "border-width:0"))
            ):
                invisible = True

    mail_text = re.search(r"(?<![A-Za-z0-9_$])mail[ \t]*\(", html, re.I) is not None
    return {
        8: -1 if favicon_external else 1,
        10: None,  # filled below with thresholds
        11: None,
        12: None,
        13: -1 if blank_action else (0 if external_action else 1),
        14: -1 if (mailto_action or mail_text) else 1,
        16: -1 if invisible else 1,
        "counts": (external_objects, objects, unsafe_anchors, anchors, external_links, links),
    }


# --- evidence --------------------------------------------------------------------------

WHOIS_CREATED = ("creation date", "created", "created on", "registered on", "registration date")
WHOIS_EXPIRES = ("registry expiry date", "registrar registration expiration date", "expiration date", "expiry date",
                 "expires", "expires on", "paid-till")
WHOIS_IDENTITY = ("registrant organization", "registrant name", "registrant email", "registrant", "org")
WHOIS_REDACTED = ("redacted", "privacy", "data protected", "not disclosed", "withheld", "gdpr", "proxy")


def parse_date(value):
    m = re.match(r"(\d{4})[-./](\d{2})[-./](\d{2})", value.strip())
    if m:
        return dt.date(int(m.group(1)), int(m.group(2)), int(m.group(3)))
    for fmt in ("%d-%b-%Y", "%d %b %Y", "%d.%m.%Y"):
        try:
            return dt.datetime.strptime(value.strip()[:11], fmt).date()
        except ValueError:
            pass
    return None


def whois_evidence(text, domain):
    """(found, created, expires, identity_matches) where identity_matches is
    None when no usable identity field exists."""
    fields = {}
    no_match = False
    for line in text.splitlines():
        line = line.strip()
        if not line or line[0] in "%#" or line.startswith(">>>"):
            continue
        if ":" not in line:
            no_match = no_match or any(m in line.lower() for m in ("no match for", "not found", "no data found"))
            continue
        key, value = line.split(":", 1)
        fields.setdefault(key.strip().lower(), []).append(value.strip())
    known = set(WHOIS_CREATED + WHOIS_EXPIRES + ("registrar", "domain name"))
    if no_match and not known.intersection(fields):
        return False, None, None, None

    def first_date(keys):
        for k in keys:
            for v in fields.get(k, []):
                return parse_date(v)
        return None

    identities = [v for k in WHOIS_IDENTITY for v in fields.get(k, []) if v]
    stem = re.sub(r"[^a-z0-9]", "", domain.split(".")[0].lower())
    usable = [v for v in identities if not any(m in v.lower() for m in WHOIS_REDACTED)]
    matches = None
    if usable:
        matches = False
        for v in usable:
            if "@" in v:
                mail = v.split("@", 1)[1].strip().lower()
                if mail == domain or mail.endswith("." + domain):
                    matches = True
            elif stem and stem in re.sub(r"[^a-z0-9]", "", v.lower()):
                matches = True
    return True, first_date(WHOIS_CREATED), first_date(WHOIS_EXPIRES), matches


class Fixtures:
    def __init__(self, root):
        self.root = Path(root)
        manifest = dict(
            (part.strip() for part in line.split("=", 1)) for line in read_list(self.root / "manifest.conf")
        )
        self.observed_on = dt.date.fromisoformat(manifest["observed_on"])
        with open(self.root / "pages.csv", newline="") as f:
            self.pages = {self.key(row["url"]): row for row in csv.DictReader(f)}
        with open(self.root / "dns.csv", newline="") as f:
            self.dns = {row["host"].lower(): ([] if row["addresses"].strip() == "-" else row["addresses"].split())
                        for row in csv.DictReader(f)}
        with open(self.root / "rank.csv", newline="") as f:
            self.ranks = {row["domain"].lower(): int(row["rank"]) for row in csv.DictReader(f)}
        self.index = {e.lower() for e in read_list(self.root / "index.txt")}
        self.reports = {e.lower() for e in read_list(self.root / "reports.txt")}

    @staticmethod
    def key(url):
        parts = urlsplit(url if "://" in url else "http://" + url)
        netloc = (parts.hostname or "") + (f":{parts.port}" if parts.port else "")
        return f"{parts.scheme.lower()}://{netloc}{parts.path or '/'}" + (f"?{parts.query}" if parts.query else "")

    def page(self, url):
        """(final_url, html) or None when the page cannot be fetched."""
        for _ in range(MAX_REDIRECTS + 1):
            row = self.pages.get(self.key(url))
            if row is None:
                return None
            if row["kind"] == "html":
                return url, (self.root / row["target"]).read_text(encoding="utf-8", errors="replace")
            if row["kind"] != "redirect":
                return None
            target = urljoin(url, row["target"])
            if urlsplit(target).scheme not in ("http", "https"):
                return None
            url = target
        return None

    def whois(self, domain):
        path = self.root / "whois" / f"{domain}.txt"
        if not path.exists():
            return None
        return whois_evidence(path.read_text(encoding="utf-8"), domain)


# --- all features --------------------------------------------------------------------------


def extract(url, fixtures, psl, shorteners, thresholds):
    host = host_of(url)
    domain = psl.registered(host)
    raw = url.strip()
    v = [None] * 22

    v[0] = -1 if is_ip(host) else 1
    v[1] = band(len(raw), thresholds["url_length"])
    v[2] = -1 if (strip_www(host) in shorteners or psl.registered(strip_www(host)) in shorteners) else 1
    v[3] = -1 if "@" in raw else 1
    scheme_end = raw.find("://")
    last = raw.rfind("//")
    v[4] = 1 if last < 0 or (scheme_end >= 0 and last <= scheme_end + 1) or (scheme_end < 0 and last == 0) else -1
    v[5] = 1 if is_ip(host) or "-" not in domain else -1
    labels = 0 if is_ip(host) else psl.labels_before_suffix(strip_www(host))
    v[6] = 1 if labels <= 1 else (0 if labels == 2 else -1)
    v[9] = -1 if "https" in host.lower() else 1

    fetched = fixtures.page(url)
    if fetched is None:
        for slot in (8, 10, 11, 12, 13, 14, 16):
            v[slot] = 1
    else:
        final_url, html = fetched
        p = page_features(final_url, html, psl)
        ext_obj, obj, bad_a, a, ext_l, links = p["counts"]
        v[10] = ratio(ext_obj, obj, thresholds["request_url_ratio"])
        v[11] = ratio(bad_a, a, thresholds["anchor_ratio"])
        v[12] = ratio(ext_l, links, thresholds["meta_script_link_ratio"])
        for slot in (8, 13, 14, 16):
            v[slot] = p[slot]

    who = fixtures.whois(domain)
    if who is None:
        v[7] = v[15] = v[17] = 0
    else:
        found, created, expires, matches = who
        if not found:
            v[7] = v[15] = v[17] = -1
        else:
            today = fixtures.observed_on
            v[7] = 0 if expires is None else (-1 if (expires - today).days <= thresholds["registration_length"] else 1)
            v[15] = 0 if matches is None else (1 if matches else -1)
            v[17] = 0 if created is None else (1 if (today - created).days >= thresholds["domain_age"] else -1)

    addresses = fixtures.dns.get(host)
    v[18] = 0 if addresses is None else (1 if addresses else -1)

    rank = next((fixtures.ranks[k] for k in (host, strip_www(host), domain) if k in fixtures.ranks), None)
    v[19] = -1 if rank is None else (1 if rank <= thresholds["traffic_rank"] else 0)
    v[20] = 1 if {host, strip_www(host), domain} & fixtures.index else -1

    listed = bool({host, domain} & fixtures.reports)
    if not listed and addresses and not is_ip(host):
        listed = bool(set(addresses) & fixtures.reports)
    v[21] = -1 if listed else 1
    return v


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--fixtures", required=True)
    ap.add_argument("--data", required=True)
    ap.add_argument("--corpus", required=True)
    args = ap.parse_args()

    data = Path(args.data)
    psl = SuffixList(data / "public_suffix_list.dat")
    shorteners = {s.lower() for s in read_list(data / "shorteners.txt")}
    thresholds = read_thresholds(data / "thresholds.conf")
    fixtures = Fixtures(args.fixtures)

    out = {}
    with open(args.corpus, newline="") as f:
        for row in csv.DictReader(f):
            values = extract(row["url"], fixtures, psl, shorteners, thresholds)
            out[row["url"]] = dict(zip(FEATURE_IDS, values))
    json.dump(out, sys.stdout, indent=1, sort_keys=False)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
