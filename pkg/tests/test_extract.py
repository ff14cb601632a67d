import string

from hypothesis import given, settings
from hypothesis import strategies as st

from adlink.extract import (
    FieldSet,
    extract_fields,
    normalize_phone,
    special_char_count,
    tokenize,
)


def test_empty_text_empty_fieldset():
    fs = extract_fields("")
    assert fs == FieldSet()


def test_phone_cost_name_age_line():
    fs = extract_fields("Call 555-123-4567, $200/hr, im Paris, 23yo")
    assert fs.phones == {"5551234567"}
    assert fs.costs == {(200, "per-hour")}
    assert fs.names == {"paris"}
    assert fs.ages == {23}


def test_color_and_ethnicity_line():
    fs = extract_fields("blue eyes blonde hair latina")
    assert fs.eye_colors == {"blue"}
    assert fs.hair_colors == {"blonde"}
    assert fs.ethnicities == {"latina"}


def test_normalize_phone_punctuation():
    assert normalize_phone("(555) 123-4567") == "5551234567"


def test_normalize_phone_spelled_digits():
    assert normalize_phone("five55-one two 3-4567") == "5551234567"


def test_normalize_phone_leet_o():
    assert normalize_phone("555-123-45o7") == "5551234507"


def test_normalize_phone_country_code():
    assert normalize_phone("1-555-123-4567") == "5551234567"
    assert normalize_phone("+1 (555) 123-4567") == "5551234567"


def test_normalize_phone_rejects():
    assert normalize_phone("12345") is None
    assert normalize_phone("555-123-45678888") is None
    assert normalize_phone("call me maybe") is None


def test_two_phones_joined_by_or():
    fs = extract_fields("call 555-123-4567 or 666-234-5678 anytime")
    assert fs.phones == {"5551234567", "6662345678"}


def test_phone_digits_masked_from_other_fields():
    fs = extract_fields("txt 5551234567")
    assert fs.phones == {"5551234567"}
    assert fs.costs == set()
    assert fs.ages == set()
    assert fs.measurements == set()


def test_age_variants_and_flagging():
    assert extract_fields("im 25 yrs old").ages == {25}
    assert extract_fields("age: 31").ages == {31}
    fs = extract_fields("sweet 17yo")
    assert fs.ages == set()
    assert fs.flagged_ages == {17}


def test_cost_variants():
    assert extract_fields("$80 hh tonight").costs == {(80, "per-half-hour")}
    assert extract_fields("150 roses").costs == {(150, "unknown")}
    assert extract_fields("donations $90").costs == {(90, "unknown")}
    assert extract_fields("200/hr special").costs == {(200, "per-hour")}


def test_height_weight_metric_conversion():
    fs = extract_fields("5'6\" and 120lbs")
    assert fs.heights == {168}  # 66 in * 2.54 rounded
    assert fs.weights == {54}  # 120 lbs -> kg rounded
    fs2 = extract_fields("170cm 60kg")
    assert fs2.heights == {170}
    assert fs2.weights == {60}


def test_measurements():
    fs = extract_fields("34c-24-36 all natural")
    assert "34c-24-36" in fs.measurements


def test_email_and_url():
    fs = extract_fields("mail me at Candy.Doll@example.COM or visit www.Candy.example")
    assert fs.emails == {"candy.doll@example.com"}
    assert fs.urls == {"www.candy.example"}


def test_restrictions():
    fs = extract_fields("no black men, donations only, NO law enforcement")
    assert "no black men" in fs.restrictions
    assert "donations only" in fs.restrictions
    assert "no law enforcement" in fs.restrictions


def test_name_stopwords_not_names():
    assert extract_fields("im here waiting").names == set()


def test_ethnicity_not_triggered_by_hair_context():
    fs = extract_fields("black hair white skin")
    assert fs.ethnicities == set()
    assert fs.hair_colors == {"black"}
    assert fs.skin_colors == {"white"}


def test_fieldset_dict_roundtrip():
    fs = extract_fields("Call 555-123-4567, $200/hr, im Paris, 23yo, blue eyes")
    assert FieldSet.from_dict(fs.to_dict()) == fs


def test_extraction_is_pure(small_corpus):
    for ad in small_corpus[:25]:
        assert extract_fields(ad.text) == extract_fields(ad.text)


def test_extracted_phones_are_ten_digits(small_fieldsets):
    for fs in small_fieldsets.values():
        for p in fs.phones:
            assert len(p) == 10 and p.isdigit()


# --- tokenize ---------------------------------------------------------------

def test_tokenize_empty():
    assert tokenize("") == ({}, {})


def test_tokenize_multiset_counts():
    unigrams, _ = tokenize("Hi!! hi there")
    assert unigrams == {"hi": 2, "there": 1}


def test_tokenize_short_tokens_dropped():
    unigrams, bigrams = tokenize("a b c")
    assert unigrams == {}
    assert bigrams == {}


def test_tokenize_bigrams_over_surviving_tokens():
    _, bigrams = tokenize("big x cats")  # "x" dropped, adjacency re-forms
    assert bigrams == {("big", "cats"): 1}


@settings(max_examples=60)
@given(st.text(alphabet=string.ascii_letters + string.digits + " !?💋é", max_size=60))
def test_tokenize_case_invariant(text):
    assert tokenize(text.upper())[0] == tokenize(text.lower())[0]


# --- special chars ----------------------------------------------------------

def test_special_chars_plain():
    assert special_char_count("abc") == 0


def test_special_chars_punct():
    assert special_char_count("a!b?c") == 2


def test_special_chars_emoji_matches_manual_count(small_corpus):
    allowed = set(string.ascii_letters + string.digits)
    for ad in small_corpus[:40]:
        manual = len([c for c in ad.text if c not in allowed and not c.isspace()])
        assert special_char_count(ad.text) == manual
