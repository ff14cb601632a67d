"""Ad records: JSONL load/save plus a seeded synthetic-corpus generator.

The on-disk format is one JSON object per line:

    {"id": str, "text": str, "posted_at": "YYYY-MM-DDThh:mm:ssZ",
     "city": str, "state": str, "image_hashes": [str, ...],
     "source_id": str | null}

``posted_at`` is ISO-8601 UTC in files and epoch seconds in memory.

The synthetic generator plants ground-truth sources (``source_id``) so the
whole pipeline can be scored against known co-source pairs. Sources come in
two archetypes whose cluster-level footprints differ: "solo" (one alias, one
city, mostly fresh images, short posting burst) and "ring" (several aliases,
cities across states, a small heavily reused image pool, long activity
window). The archetype is encoded as a suffix of ``source_id`` so later
stages can derive cluster labels without a side channel.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

__all__ = [
    "Ad",
    "SyntheticSpec",
    "SourceProfile",
    "LoadResult",
    "load_corpus",
    "write_corpus",
    "generate_synthetic",
    "synthetic_sources",
]

# Corpus epoch: all synthetic timestamps are offsets from here.
_BASE_TS = 1451606400  # 2016-01-01T00:00:00Z


def _parse_timestamp(value: str) -> int:
    """ISO-8601 string -> epoch seconds. Naive values are taken as UTC."""
    if not isinstance(value, str) or not value:
        raise ValueError("posted_at must be a non-empty string")
    raw = value.replace("Z", "+00:00")
    dt = datetime.fromisoformat(raw)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def _format_timestamp(epoch: int) -> str:
    return datetime.fromtimestamp(epoch, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class Ad:
    """One advertisement record. Immutable; safe to share across threads."""

    id: str
    text: str
    posted_at: int  # epoch seconds, UTC
    city: str
    state: str
    image_hashes: frozenset[str]
    source_id: str | None = None

    @classmethod
    def from_json_dict(cls, obj: dict) -> "Ad":
        if not isinstance(obj, dict):
            raise ValueError("record is not a JSON object")
        for key in ("id", "text", "posted_at", "city", "state", "image_hashes"):
            if key not in obj:
                raise ValueError(f"missing field {key!r}")
        ad_id = obj["id"]
        if not isinstance(ad_id, str) or not ad_id:
            raise ValueError("id must be a non-empty string")
        text = obj["text"]
        if not isinstance(text, str):
            raise ValueError("text must be a string")
        posted = _parse_timestamp(obj["posted_at"])
        city = obj["city"]
        state = obj["state"]
        if not isinstance(city, str) or not isinstance(state, str):
            raise ValueError("city/state must be strings")
        hashes = obj["image_hashes"]
        if not isinstance(hashes, list) or not all(isinstance(h, str) for h in hashes):
            raise ValueError("image_hashes must be a list of strings")
        source = obj.get("source_id")
        if source is not None and not isinstance(source, str):
            raise ValueError("source_id must be a string or null")
        return cls(
            id=ad_id,
            text=text,
            posted_at=posted,
            city=city,
            state=state,
            image_hashes=frozenset(hashes),
            source_id=source,
        )

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "text": self.text,
            "posted_at": _format_timestamp(self.posted_at),
            "city": self.city,
            "state": self.state,
            "image_hashes": sorted(self.image_hashes),
            "source_id": self.source_id,
        }


@dataclass
class LoadResult:
    """Valid ads in file order plus one (line_number, reason) per reject."""

    ads: list[Ad]
    rejects: list[tuple[int, str]] = field(default_factory=list)

    @property
    def n_rejected(self) -> int:
        return len(self.rejects)


def load_corpus(path: str | Path) -> LoadResult:
    """Read an ads JSONL file.

    Malformed lines (bad JSON, schema violations, duplicate ids) are
    recorded and skipped; an unreadable file raises.
    """
    result = LoadResult(ads=[])
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            try:
                ad = Ad.from_json_dict(json.loads(stripped))
            except (json.JSONDecodeError, ValueError, OverflowError) as exc:
                result.rejects.append((lineno, str(exc)))
                continue
            if ad.id in seen:
                result.rejects.append((lineno, f"duplicate id {ad.id!r}"))
                continue
            seen.add(ad.id)
            result.ads.append(ad)
    return result


def write_corpus(ads: list[Ad], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ad in ads:
            fh.write(json.dumps(ad.to_json_dict(), ensure_ascii=False) + "\n")


# ---------------------------------------------------------------------------
# Synthetic corpus
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SyntheticSpec:
    """Knobs for the planted-ground-truth generator.

    The defaults describe the standard desk-scale benchmark: 50 sources,
    roughly 2,000 ads. Identical ``rng_seed`` yields a byte-identical corpus.
    ``phone_collision_rate`` > 0 lets distinct sources share a phone, which
    deliberately corrupts the proxy-label graph for stress tests.
    """

    n_sources: int = 50
    ads_per_source: tuple[int, int] = (20, 60)
    phones_per_source: tuple[int, int] = (3, 4)
    phone_visibility: float = 0.78
    ring_fraction: float = 0.3
    phone_collision_rate: float = 0.0
    repost_rate: float = 0.3
    time_span_days: int = 180
    noise_vocab_size: int = 3000
    rng_seed: int = 7

    def validate(self) -> None:
        if self.n_sources <= 0:
            raise ValueError("n_sources must be positive")
        for name in ("ads_per_source", "phones_per_source"):
            lo, hi = getattr(self, name)
            if lo <= 0 or hi < lo:
                raise ValueError(f"{name} must be a positive (lo, hi) range")
        for name in ("phone_visibility", "ring_fraction", "phone_collision_rate", "repost_rate"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.time_span_days <= 0:
            raise ValueError("time_span_days must be positive")
        if self.noise_vocab_size < 100:
            raise ValueError("noise_vocab_size must be >= 100")


@dataclass(frozen=True)
class SourceProfile:
    """Ground-truth description of one planted source."""

    source_id: str
    archetype: str  # "solo" | "ring"
    aliases: tuple[str, ...]
    tag: str  # signature handle present in every ad of the source
    phones: tuple[str, ...]
    cities: tuple[tuple[str, str], ...]  # (city, state)
    images: tuple[str, ...]
    rates: tuple[int, ...]
    rate_unit: str
    ages: tuple[int, ...]
    bodies: tuple[int, ...]  # indices into _BODIES
    persona: tuple[str, ...]  # pre-rendered persona snippets
    restriction: str  # "" when the source never posts one
    url: str  # "" when the source has no site
    emoji_heavy: bool
    start_ts: int
    active_seconds: int


_CITY_POOL = (
    ("atlanta", "GA"), ("miami", "FL"), ("tampa", "FL"), ("orlando", "FL"),
    ("chicago", "IL"), ("dallas", "TX"), ("houston", "TX"), ("austin", "TX"),
    ("phoenix", "AZ"), ("tucson", "AZ"), ("seattle", "WA"), ("portland", "OR"),
    ("denver", "CO"), ("boston", "MA"), ("queens", "NY"), ("brooklyn", "NY"),
    ("manhattan", "NY"), ("vegas", "NV"), ("reno", "NV"), ("memphis", "TN"),
    ("nashville", "TN"), ("sacramento", "CA"), ("oakland", "CA"), ("fresno", "CA"),
    ("omaha", "NE"), ("tulsa", "OK"), ("columbus", "OH"), ("cleveland", "OH"),
    ("louisville", "KY"), ("richmond", "VA"),
)

_NAME_POOL = (
    "mia", "bella", "candy", "paris", "diamond", "jasmine", "lexi", "amber",
    "crystal", "destiny", "angel", "star", "honey", "cherry", "coco", "ruby",
    "jade", "kitty", "lola", "gigi", "nina", "layla", "sasha", "roxy",
    "misty", "dolly", "peaches", "ginger", "raven", "skye", "luna", "violet",
    "daisy", "rosie", "ivy", "pearl", "trixie", "bambi", "chanel", "mercedes",
    "lexus", "porsha", "tiffany", "brittany", "kayla", "alexis", "savannah",
    "sierra", "dakota", "cheyenne", "autumn", "summer", "april", "june",
    "marilyn", "vixen", "foxy", "duchess", "princess", "queenie",
)

_BODIES = (
    "sweet and discreet your favorite playmate is waiting come relax and unwind no rush real pics always",
    "upscale companion available for the classy gentleman satisfaction always guaranteed dont miss out",
    "new in town for a limited time only come see why everyone keeps coming back specials all night",
    "the total package beauty and brains ready to make all your dreams come true available day and night",
    "your perfect escape from stress treat yourself you deserve the very best no games no drama",
    "one hundred percent real recent pics sweet petite and always on time lets have some fun",
    "available now for outcall anywhere in the metro incall too ask about my specials serious callers only",
    "exotic and addictive once you try me you will never want anyone else limited availability book fast",
    "early bird specials all morning open minded no rush sessions ask about my two girl show",
    "independent and drama free always fresh and clean private location easy parking walk ins welcome",
    "let me melt all your stress away with my magic touch soft hands warm heart come see me tonight",
    "back in your city by popular demand dont wait book your appointment before im gone again",
    "first timers welcome gentle and patient your comfort comes first screening required for safety",
    "party friendly night owl up all night waiting on you come play with me until the sun comes up",
    "mature gentlemen preferred quality over quantity im worth every penny and then some come find out",
    "bored and lonely looking for company tonight lets keep each other warm no clock watching here",
    "visiting your area this week only dont sleep on me catch me while you can leaving soon",
    "the girl next door with a naughty side best of both worlds guaranteed to keep you smiling",
)

_GREETINGS = ("hey", "heyy", "heyyy", "hi guys", "hello gentlemen", "whats up", "good evening", "im back")
_INTROS = ("im {name}", "its {name}", "this is {name}", "ask for {name}", "call me {name}")
_CALLS = ("call or text", "call me now", "txt me", "hmu", "call anytime", "text only")
_EMOJI = tuple("\U0001F48B\U0001F495\U0001F339\U0001F352\U0001F525✨\U0001F4A6\U0001F380\U0001F31F\U0001F48E\U0001F618\U0001F351\U0001F33A❤⭐")
_ETHNICITIES = ("latina", "asian", "ebony", "exotic", "mixed", "brazilian", "dominican", "persian", "russian", "italian")
_HAIR = ("blonde", "brunette", "black", "brown", "red", "auburn")
_EYES = ("blue", "green", "brown", "hazel", "gray")
_SKIN = ("caramel", "chocolate", "tan", "olive", "fair")
_RESTRICTIONS = (
    "no black men", "no aa", "donations only", "gentlemen only", "no explicit talk",
    "no pimps", "no law enforcement", "no blocked calls", "outcalls only", "incalls only",
)
_TLDS = ("com", "net", "club")

_SYLLABLES = (
    "ba", "be", "bi", "bo", "bu", "da", "de", "di", "do", "du", "ka", "ke", "ki",
    "ko", "ku", "la", "le", "li", "lo", "lu", "ma", "me", "mi", "mo", "mu", "na",
    "ne", "ni", "no", "nu", "ra", "re", "ri", "ro", "ru", "sa", "se", "si", "so",
    "su", "ta", "te", "ti", "to", "tu", "va", "ve", "vi", "vo", "vu", "za", "zo",
)

_DIGIT_WORDS = {
    "0": "zero", "1": "one", "2": "two", "3": "three", "4": "four",
    "5": "five", "6": "six", "7": "seven", "8": "eight", "9": "nine",
}


def _noise_vocab(size: int) -> list[str]:
    # Deterministic pseudo-word list; index order doubles as frequency rank.
    rng = random.Random(0x5EED)
    words = []
    seen = set()
    while len(words) < size:
        w = "".join(rng.choice(_SYLLABLES) for _ in range(rng.randint(2, 4)))
        if w not in seen:
            seen.add(w)
            words.append(w)
    return words


def _fresh_phone(rng: random.Random, used: set[str]) -> str:
    while True:
        digits = str(rng.randint(2, 9)) + "".join(str(rng.randint(0, 9)) for _ in range(9))
        if digits not in used:
            used.add(digits)
            return digits


def _make_tag(rng: random.Random, used: set[str]) -> str:
    while True:
        tag = rng.choice(_NAME_POOL) + rng.choice(("xo", "xx", "vip", "luv", "baby", "doll")) + str(rng.randint(10, 99))
        if tag not in used:
            used.add(tag)
            return tag


def synthetic_sources(spec: SyntheticSpec) -> list[SourceProfile]:
    """Deterministic source roster for ``spec`` (same rng stream prefix as
    :func:`generate_synthetic`, so profiles match the generated ads)."""
    spec.validate()
    rng = random.Random(spec.rng_seed)
    return _build_sources(rng, spec)


def _build_sources(rng: random.Random, spec: SyntheticSpec) -> list[SourceProfile]:
    used_phones: set[str] = set()
    used_tags: set[str] = set()
    span_seconds = spec.time_span_days * 86400
    sources: list[SourceProfile] = []
    n_rings = round(spec.n_sources * spec.ring_fraction)
    for idx in range(spec.n_sources):
        is_ring = idx < n_rings
        archetype = "ring" if is_ring else "solo"
        source_id = f"s{idx:03d}-{archetype}"
        n_ads_hint = (spec.ads_per_source[0] + spec.ads_per_source[1]) // 2

        if is_ring:
            aliases = tuple(rng.sample(_NAME_POOL, rng.randint(3, 5)))
            n_cities = rng.randint(3, 6)
            cities = tuple(rng.sample(_CITY_POOL, n_cities))
            images = tuple(f"{rng.getrandbits(64):016x}" for _ in range(rng.randint(6, 10)))
            ages = tuple(sorted(rng.sample(range(19, 33), len(aliases))))
            active = rng.randint(60, min(160, spec.time_span_days)) * 86400
        else:
            aliases = (rng.choice(_NAME_POOL),)
            cities = (rng.choice(_CITY_POOL),)
            images = tuple(f"{rng.getrandbits(64):016x}" for _ in range(max(4, 2 * n_ads_hint)))
            ages = (rng.randint(19, 35),)
            active = rng.randint(5, 30) * 86400

        n_phones = rng.randint(*spec.phones_per_source)
        phones = tuple(_fresh_phone(rng, used_phones) for _ in range(n_phones))
        base_rate = rng.choice((80, 100, 120, 150, 180, 200, 250, 300))
        rates = (base_rate,) if rng.random() < 0.5 else (base_rate, base_rate + rng.choice((20, 40, 50)))
        rate_unit = rng.choice(("hr", "hh", "roses"))
        bodies = tuple(rng.sample(range(len(_BODIES)), rng.randint(2, 3)))

        persona = []
        if rng.random() < 0.6:
            persona.append(f"sexy {rng.choice(_ETHNICITIES)}")
        if rng.random() < 0.5:
            persona.append(f"{rng.choice(_HAIR)} hair {rng.choice(_EYES)} eyes")
        if rng.random() < 0.35:
            feet, inches = rng.randint(4, 5), rng.randint(0, 11)
            persona.append(f"{feet}'{inches}\" {rng.randint(100, 150)}lbs")
        if rng.random() < 0.3:
            persona.append(f"{rng.randint(32, 38)}{rng.choice(('b', 'c', 'd', 'dd'))}-{rng.randint(22, 28)}-{rng.randint(32, 42)}")
        if rng.random() < 0.25:
            persona.append(f"{rng.choice(_SKIN)} skin")

        restriction = rng.choice(_RESTRICTIONS) if rng.random() < 0.4 else ""
        tag = _make_tag(rng, used_tags)
        url = f"www.{tag}.{rng.choice(_TLDS)}" if (is_ring and rng.random() < 0.6) else ""
        start = _BASE_TS + int(rng.random() * max(1, span_seconds - active))

        sources.append(SourceProfile(
            source_id=source_id,
            archetype=archetype,
            aliases=aliases,
            tag=tag,
            phones=phones,
            cities=cities,
            images=images,
            rates=rates,
            rate_unit=rate_unit,
            ages=ages,
            bodies=bodies,
            persona=tuple(persona),
            restriction=restriction,
            url=url,
            emoji_heavy=rng.random() < 0.5,
            start_ts=start,
            active_seconds=active,
        ))

    if spec.phone_collision_rate > 0 and len(sources) > 1:
        for idx in range(1, len(sources)):
            if rng.random() < spec.phone_collision_rate:
                donor = sources[rng.randrange(idx)]
                stolen = rng.choice(donor.phones)
                victim = sources[idx]
                phones = tuple(list(victim.phones[:-1]) + [stolen]) if len(victim.phones) > 1 else (stolen,)
                sources[idx] = SourceProfile(**{**victim.__dict__, "phones": phones})
    return sources


def _render_phone(rng: random.Random, digits: str, compact_bias: float = 0.25) -> str:
    style = rng.random()
    if style < compact_bias:
        return digits
    if style < compact_bias + 0.32:
        return f"({digits[:3]}) {digits[3:6]}-{digits[6:]}"
    if style < compact_bias + 0.52:
        return f"{digits[:3]}-{digits[3:6]}-{digits[6:]}"
    if style < compact_bias + 0.63:
        return f"{digits[:3]}.{digits[3:6]}.{digits[6:]}"
    # partially spelled-out digits, a timeworn filter dodge
    out = []
    for ch in digits:
        out.append(_DIGIT_WORDS[ch] if rng.random() < 0.4 else ch)
    return " ".join(out)


def _emoji_run(rng: random.Random, heavy: bool) -> str:
    n = rng.randint(2, 6) if heavy else rng.randint(0, 2)
    return "".join(rng.choice(_EMOJI) for _ in range(n))


def _fresh_base(rng: random.Random, src: SourceProfile, vocab: list[str]) -> list[str]:
    """Everything except phone/city; the unit a repost copies verbatim."""
    name = rng.choice(src.aliases)
    age = rng.choice(src.ages)
    parts: list[str] = []
    parts.append(rng.choice(_GREETINGS))
    parts.append(rng.choice(_INTROS).format(name=name))
    parts.append(f"{age}{rng.choice(('yo', ' yrs', ' years old'))}")
    parts.append(_BODIES[rng.choice(src.bodies)])
    if src.persona and rng.random() < 0.8:
        parts.append(rng.choice(src.persona))

    rate = rng.choice(src.rates)
    if src.rate_unit == "roses":
        parts.append(f"{rate} roses")
    elif rng.random() < 0.5:
        parts.append(f"${rate}/{src.rate_unit}")
    else:
        parts.append(f"${rate} {src.rate_unit}")

    if src.restriction and rng.random() < 0.7:
        parts.append(src.restriction)
    if src.url and rng.random() < 0.6:
        parts.append(src.url)

    # light head skew: enough low-df collisions to wire sources together in
    # the blocking graph without flooding it with mid-frequency keys
    for _ in range(rng.randint(0, 5)):
        idx = int(len(vocab) * rng.random() ** 1.5)
        parts.append(vocab[min(idx, len(vocab) - 1)])
    return parts


def _make_ad_text(rng: random.Random, src: SourceProfile, spec: SyntheticSpec,
                  vocab: list[str], city: str,
                  flagship: list[str] | None) -> tuple[str, list[str], list[str]]:
    """Returns (text, visible_phones, base_used).

    With probability ``repost_rate`` the ad reuses the source's flagship
    base text verbatim (phones rotate), which is what produces genuine
    near-duplicate pairs with disjoint phone sets.
    """
    repost = flagship is not None and rng.random() < spec.repost_rate
    base = list(flagship) if repost else _fresh_base(rng, src, vocab)
    parts = list(base)

    visible: list[str] = []
    if rng.random() < spec.phone_visibility:
        k = 2 if (len(src.phones) > 1 and rng.random() < 0.12) else 1
        visible = rng.sample(list(src.phones), k)
        compact_bias = 0.7 if repost else 0.25
        rendered = " or ".join(_render_phone(rng, p, compact_bias) for p in visible)
        parts.append(f"{rng.choice(_CALLS)} {rendered}")

    parts.append(f"{city} area")
    parts.append(src.tag)

    # emoji runs spliced between random segments
    out: list[str] = []
    for seg in parts:
        out.append(seg)
        if rng.random() < (0.5 if src.emoji_heavy else 0.15):
            run = _emoji_run(rng, src.emoji_heavy)
            if run:
                out.append(run)
    return " ".join(out), visible, base


def generate_synthetic(spec: SyntheticSpec) -> list[Ad]:
    """Generate a corpus with planted sources. Deterministic per seed."""
    spec.validate()
    rng = random.Random(spec.rng_seed)
    sources = _build_sources(rng, spec)
    vocab = _noise_vocab(spec.noise_vocab_size)

    drafts = []
    for src in sources:
        n_ads = rng.randint(*spec.ads_per_source)
        flagship: list[str] | None = None
        for _ in range(n_ads):
            city, state = rng.choice(src.cities)
            posted = src.start_ts + int(rng.random() * src.active_seconds)
            text, _, base = _make_ad_text(rng, src, spec, vocab, city, flagship)
            if flagship is None:
                flagship = base
            if src.archetype == "ring":
                imgs = rng.sample(list(src.images), min(len(src.images), rng.randint(2, 4)))
            else:
                imgs = rng.sample(list(src.images), min(len(src.images), rng.randint(1, 3)))
            drafts.append((text, posted, city, state, imgs, src.source_id))

    rng.shuffle(drafts)
    ads = []
    for i, (text, posted, city, state, imgs, source_id) in enumerate(drafts):
        ads.append(Ad(
            id=f"a{i:05d}",
            text=text,
            posted_at=posted,
            city=city,
            state=state,
            image_hashes=frozenset(imgs),
            source_id=source_id,
        ))
    return ads
