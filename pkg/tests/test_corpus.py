import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from argpair.corpus import (
    UNK, DataError, Vocabulary, build_vocabulary, corpus_stats, encode_instance,
    extract_instances, generate_synthetic, read_dataset, split_quote_blocks, split_sentences,
    tokenize, validate_instance, write_dataset,
)
from argpair.corpus.instances import Argument, Instance, instance_to_record

OP = ("Public transport should be free for every resident of the city. "
      "Cars are the main source of noise in most neighbourhoods downtown. "
      "Bike lanes make streets safer for children walking to school. "
      "Parking fees are far too low in the historic center today. "
      "Night buses are almost always empty after midnight on weekdays. "
      "Short.")

# Five reply posts, each quoting one OP sentence and answering it.
REPLIES = [
    "> Public transport should be free for every resident of the city.\n"
    "Free fares would just shift the cost onto general taxpayers instead. Other stuff here.",
    "> Cars are the main source of noise in most neighbourhoods downtown.\n"
    "Construction work is far louder than traffic in my experience.",
    "> Bike lanes make streets safer for children walking to school.\n"
    "Painted lanes without barriers do not protect anyone at all.",
    "> Parking fees are far too low in the historic center today.\n"
    "Raising fees would hurt the small shops that rely on visitors.",
    "> Night buses are almost always empty after midnight on weekdays.\n"
    "Empty buses still provide a vital safety net for shift workers.",
]

QUOTES = [split_sentences(OP)[i] for i in range(5)]
ANSWERS = [split_sentences(r.splitlines()[1])[0] for r in REPLIES]


def fixture_thread():
    return ("t0", OP, list(REPLIES))


def test_fixture_thread_yields_hand_enumerated_instances():
    insts = extract_instances([fixture_thread()], negatives=4, seed=0)
    got = {(i.quotation.text, i.positive.text) for i in insts}
    assert got == set(zip(QUOTES, ANSWERS))
    for inst in insts:
        k = ANSWERS.index(inst.positive.text)
        # the four negatives are exactly the other posts' answers
        assert sorted(a.text for a in inst.negatives) == sorted(ANSWERS[:k] + ANSWERS[k + 1:])
        assert inst.reply_post == k
        validate_instance(inst)


def test_six_token_quotation_is_rejected():
    six = "Buses are too slow here ."
    assert len(tokenize(six)) == 6
    op = OP.replace("Public transport should be free for every resident of the city.", six)
    replies = ["> " + six + "\nFree fares would just shift the cost onto general taxpayers."]
    replies += REPLIES[1:]
    insts = extract_instances([("t", op, replies)], negatives=3)
    assert six not in {i.quotation.text for i in insts}
    assert len(insts) == 4


def test_two_sentence_quote_is_skipped():
    two = ("> Cars are the main source of noise in most neighbourhoods downtown. "
           "Bike lanes make streets safer for children walking to school.\n"
           "I disagree with both of these points quite strongly.")
    insts = extract_instances([("t", OP, REPLIES[:1] + [two] + REPLIES[2:])], negatives=3)
    assert "I disagree with both of these points quite strongly." not in {
        i.positive.text for i in insts}
    assert len(insts) == 4


def test_quote_must_copy_an_original_sentence():
    alien = "> This sentence is not in the original post at all.\nA reply that has seven tokens ."
    insts = extract_instances([("t", OP, REPLIES[:4] + [alien])], negatives=3)
    assert len(insts) == 4


def test_too_few_other_posts_gives_no_instance():
    assert extract_instances([("t", OP, REPLIES[:3])], negatives=4) == []


def test_seed_changes_only_negatives():
    replies = REPLIES + [
        "> Short.\nnothing",
        "> Cars are the main source of noise in most neighbourhoods downtown.\n"
        "Leaf blowers are the real culprits on a quiet sunday morning.",
    ]
    a = extract_instances([("t", OP, replies)], negatives=4, seed=0)
    b = extract_instances([("t", OP, replies)], negatives=4, seed=1)
    assert [(i.id, i.quotation.text, i.positive.text) for i in a] == \
        [(i.id, i.quotation.text, i.positive.text) for i in b]
    assert any([n.text for n in x.negatives] != [n.text for n in y.negatives] for x, y in zip(a, b))


def test_reply_contexts_never_contain_the_quotation():
    echo = REPLIES[0] + "\nPublic transport should be free for every resident of the city."
    insts = extract_instances([("t", OP, [echo] + REPLIES[1:])], negatives=4)
    for inst in insts:
        validate_instance(inst)


def test_quote_blocks_and_markup():
    post = "&gt; quoted line one\n&gt; still quoted\nbody text. more body!"
    assert split_quote_blocks(post) == [(True, "quoted line one still quoted"),
                                        (False, "body text. more body!")]
    assert split_sentences("Dr. Smith left. J. Doe stayed! Why?") == \
        ["Dr. Smith left.", "J. Doe stayed!", "Why?"]


def test_build_vocabulary_threshold():
    docs = ["the"] * 20 + ["zyx"] * 3
    v = build_vocabulary(docs, threshold=15)
    assert len(v) == 5 and "the" in v and "zyx" not in v
    assert len(build_vocabulary([], threshold=15)) == 4


def test_encoding_round_trip_and_unknowns(tmp_path):
    v = build_vocabulary(["the cat sat on the mat ."], threshold=0)
    assert v.decode(v.encode("The cat sat.")) == "the cat sat ."
    assert v.encode("dog") == [UNK]
    v.save(tmp_path / "v.json")
    w = Vocabulary.load(tmp_path / "v.json")
    assert w.id_to_token == v.id_to_token


def _instance(q="one two three four five six seven", n_tokens=7, **kw):
    words = " ".join(f"w{i}" for i in range(n_tokens))
    base = dict(id="x", quotation=Argument(q), positive=Argument(words),
                negatives=[Argument(words)] * 4, quotation_context=[q],
                reply_contexts=[[words]] * 5)
    base.update(kw)
    return Instance(**base)


def test_truncation_and_empty_argument():
    inst = _instance(n_tokens=50)
    v = build_vocabulary([inst.positive.text, inst.quotation.text], threshold=0)
    enc = encode_instance(inst, v, max_arg_tokens=45)
    assert len(enc.candidates[0]) == 45
    np.testing.assert_array_equal(enc.candidates[0], v.encode(inst.positive.text)[:45])
    with pytest.raises(DataError, match="bad-one"):
        encode_instance(_instance(id="bad-one", positive=Argument("  ")), v)


@pytest.mark.parametrize("bad", [
    dict(negatives=[Argument("w0 w1 w2 w3 w4 w5 w6")] * 3),
    dict(positive=Argument("one two three four five six")),
    dict(reply_contexts=[["x one two three four five six seven y"]] * 5),
    dict(reply_contexts=[["w0"]] * 4),
])
def test_validation_rejects_invariant_violations(bad, tmp_path):
    inst = _instance(**bad)
    with pytest.raises(DataError):
        validate_instance(inst)
    path = tmp_path / "d.jsonl"
    path.write_text(json.dumps(instance_to_record(inst)) + "\n")
    with pytest.raises(DataError):
        read_dataset(path)


def test_dataset_round_trip(tmp_path):
    insts = extract_instances([fixture_thread()])
    write_dataset(tmp_path / "d.jsonl", insts)
    assert read_dataset(tmp_path / "d.jsonl") == insts


def test_two_label_one_replies_are_rejected(tmp_path):
    rec = instance_to_record(_instance())
    rec["replies"][2]["label"] = 1
    (tmp_path / "d.jsonl").write_text(json.dumps(rec) + "\n")
    with pytest.raises(DataError):
        read_dataset(tmp_path / "d.jsonl")


def test_stats_two_posts():
    posts = ["One here. Two here. Three here.", "Alpha. Beta is. Gamma is! Delta? Eps is."]
    s = corpus_stats([_instance()], posts)
    assert s.args_per_post.mean == 4.0 and s.args_per_post.std == 1.0


def test_stats_single_post_has_zero_spread():
    s = corpus_stats([_instance()], ["Only one post here."])
    assert s.args_per_post.std == 0 and s.tokens_per_post.std == 0
    assert s.tokens_per_quotation.std == 0 and s.pairs_per_post_pair.std == 0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(1, 9), min_size=1, max_size=8))
def test_stats_match_population_moments(counts):
    posts = [" ".join(f"s{j}." for j in range(c)) for c in counts]
    s = corpus_stats([_instance()], posts)
    assert s.args_per_post.mean == pytest.approx(np.mean(counts))
    assert s.args_per_post.std == pytest.approx(np.std(counts))
    assert min(counts) <= s.args_per_post.mean <= max(counts)


def test_synthetic_is_deterministic_and_valid():
    a, va = generate_synthetic(5, 50, seed=7)
    b, vb = generate_synthetic(5, 50, seed=7)
    assert a == b and va.id_to_token == vb.id_to_token
    assert len(a) == 50
    for inst in a:
        assert len(inst.negatives) == 4
        validate_instance(inst)
    assert generate_synthetic(5, 50, seed=8)[0] != a


def test_synthetic_overlap_oracle():
    insts, _ = generate_synthetic(5, 50, seed=7)

    def pick(inst):
        q = set(inst.quotation.tokens)
        overlaps = [len(q & set(c.tokens)) for c in inst.candidates]
        return int(np.argmax(overlaps))

    p_at_1 = np.mean([pick(i) == 0 for i in insts])
    assert p_at_1 >= 0.9


def test_synthetic_replies_recur_across_roles():
    # the same sentence is a positive somewhere and a negative elsewhere, so
    # the reply alone says nothing about its label
    insts, _ = generate_synthetic(5, 50, seed=7)
    pos = {i.positive.text for i in insts}
    neg = {a.text for i in insts for a in i.negatives}
    assert len(pos & neg) >= len(pos) // 2


def test_synthetic_rejects_one_template():
    with pytest.raises(ValueError):
        generate_synthetic(1, 5)
