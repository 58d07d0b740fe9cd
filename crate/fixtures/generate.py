#!/usr/bin/env python3
"""Regenerates the fixture corpora under fixtures/.

    python3 fixtures/generate.py

Output is deterministic. The script mirrors the crate's tokenizer, lexicon
scorer, hash-bag embedder and compound-statement rule closely enough to
assert the properties the tests rely on before writing anything.
`ablation/dataset.jsonl` is not written here; it comes from
`critique dataset gen` (see README).
"""

import json
import math
import random
import re
import zlib
from pathlib import Path

ROOT = Path(__file__).resolve().parent
CRATE_DATA = ROOT.parent / "crates" / "core" / "data"

# ---------------------------------------------------------------------------
# mirrors of the Rust helpers

STOPWORDS = set(
    """a about all also am an and any are as at be been bit but by can cant come did didnt do does doesnt dont
    feel feels for from get got had has have here how i if im in is it its just like look looks me more much my
    no not of on one only or our place prefer really restaurant seems so some spot than that thats the their
    them there theres these they this those to too up very was way we were what will with would you""".split()
)
NEGATORS = set(
    """not no never nothing without hardly nor dont doesnt didnt isnt wasnt arent werent cant cannot wont
    wouldnt couldnt shouldnt""".split()
)


def words(text):
    text = text.replace("'", "").replace("’", "")
    return [w.lower() for w in re.findall(r"[^\W_]+", text)]


def lexicon():
    out = {}
    for line in (CRATE_DATA / "positivity_lexicon.tsv").read_text().splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        w, v = line.split("\t")
        out[w] = float(v)
    return out


LEXICON = lexicon()


def positivity(sentence):
    toks = words(sentence)
    total, hits = 0.0, 0
    for i, t in enumerate(toks):
        if t not in LEXICON:
            continue
        neg = any(p in NEGATORS for p in toks[max(0, i - 3):i])
        total += -LEXICON[t] if neg else LEXICON[t]
        hits += 1
    return 0.0 if hits == 0 else min(1.0, max(0.0, total / hits))


def fnv1a(data):
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def hashbag(text, dim=256):
    toks = words(text)
    content = [t for t in toks if t not in STOPWORDS] or toks
    v = [0.0] * dim
    for t in content:
        v[fnv1a(t.encode()) % dim] += 1.0
    n = math.sqrt(sum(x * x for x in v))
    return [x / n for x in v]


def terminate(part):
    t = part.strip()
    if not t:
        return ""
    body = t.rstrip(".")
    if len(body) < len(t):
        return body + "."
    if t.endswith(("!", "?")):
        return t
    return t + "."


def compound(parts):
    return " ".join(p for p in map(terminate, parts) if p)


def dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def ranked(query_vec, cands, vec_of):
    """Candidates (id, sentence) best first, ties by id."""
    scored = [(-dot(query_vec, vec_of(s)), cid, s) for cid, s in cands]
    scored.sort()
    return [(cid, s, -neg) for neg, cid, s in scored]


def write_jsonl(path, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as f:
        for r in rows:
            f.write(json.dumps(r, ensure_ascii=False, sort_keys=False) + "\n")


def write_json(path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, ensure_ascii=False) + "\n")


def exemplars():
    rows = [json.loads(l) for l in (CRATE_DATA / "exemplars.jsonl").read_text().splitlines() if l.strip()]
    return rows


def build_prompt(critique, exs):
    lines = [f"{e['critique'].strip()}=>{e['preference'].strip()}" for e in exs]
    lines.append(f"{critique.strip()}=>I prefer")
    return "\n".join(lines)


def assign_reviews(sentences, restaurants, prefix, rng, min_per=2, max_per=4, fillers=()):
    """Deal (sentence, ...) items into 5-star reviews, plus a few low-rated ones."""
    items = list(sentences)
    rng.shuffle(items)
    reviews = []
    n = 0
    i = 0
    while i < len(items):
        take = rng.randint(min_per, max_per)
        chunk = items[i:i + take]
        i += take
        n += 1
        rid = restaurants[(n - 1) % len(restaurants)]["id"]
        if fillers and rng.random() < 0.5:
            chunk = chunk + [rng.choice(fillers)]
        reviews.append({"id": f"{prefix}{n:04}", "restaurant_id": rid, "rating": rng.choice([4, 5, 5]), "sentences": chunk})
    return reviews


def review_rows(reviews):
    return [{"id": r["id"], "restaurant_id": r["restaurant_id"], "rating": r["rating"], "text": " ".join(r["sentences"])} for r in reviews]


def candidates_of(reviews):
    out = []
    for r in reviews:
        if r["rating"] < 4:
            continue
        for i, s in enumerate(r["sentences"]):
            if positivity(s) >= 0.7:
                out.append((f"{r['id']}#{i}", s, r["restaurant_id"]))
    return out


# ---------------------------------------------------------------------------
# showcase set: the table cases, the session exchange, a concept-bag embedding
# cassette and an interpreter cassette.

TABLE = [
    {
        "critique": "It looks too casual.",
        "preference": "I prefer a fancier place.",
        "completion": " a fancier place.",
        "crit_arguments": ["Very cheesy, very fresh!", "Very kid friendly.", "Awesome ambiance!"],
        "pref_arguments": [
            "Elegant, upscale and classy place for a special occasion.",
            "The best restaurant around here.",
            "Superior restaurant, the only place I will have a dim sum.",
        ],
        "bolded": [
            "Elegant, upscale and classy place for a special occasion.",
            "The best restaurant around here.",
            "Superior restaurant, the only place I will have a dim sum.",
        ],
    },
    {
        "critique": "It has a freaking band!",
        "preference": "I prefer a more quiet place.",
        "completion": " a more quiet place.",
        "crit_arguments": ["It has an awesome atmosphere.", "It has a great atmosphere."],
        "pref_arguments": ["Excellent spot to spend time alone or talk business.", "Good ambiance.", "Great place to be at night."],
        "bolded": ["Excellent spot to spend time alone or talk business."],
    },
    {
        "critique": "I don't really like seafood.",
        "preference": "I prefer beef or chicken.",
        "completion": " beef or chicken.",
        "crit_arguments": [
            "Everything delicious with an exception of of the shrimps.",
            "I found that I do not enjoy tuna, but my mom thought it was excellent.",
            "For dinner, I enjoyed the scallops one night and the sea bass the second.",
        ],
        "pref_arguments": [
            "I only eat Beef Brisket here because is delicious!",
            "Chicken flautas are always delish.",
            "Chicken moist and tender.",
        ],
        "bolded": [
            "I only eat Beef Brisket here because is delicious!",
            "Chicken flautas are always delish.",
            "Chicken moist and tender.",
        ],
    },
]

SINGLE_TURN = {
    "critique": "It doesn't look good for a date",
    "preference": "I prefer a more romantic place.",
    "completion": " a more romantic place.",
    "argument": "Perfect for a romantic dinner.",
}

# critique -> recorded completions (three trials each)
SHOWCASE_COMPLETIONS = {
    "It looks too casual": [" a fancier place.", " a more upscale place.", " a fancier place."],
    "It looks too casual.": [" a fancier place.", " a more upscale place.", " a fancier place."],
    "It has a freaking band!": [" a more quiet place.", " a quieter place.", " a more quiet place."],
    "I don't really like seafood.": [" beef or chicken.", " meat dishes.", " beef or chicken."],
    "I don't really like seafood": [" beef or chicken.", " meat dishes.", " beef or chicken."],
    "It doesn't look good for a date": [" a more romantic place.", " a romantic place.", " a more romantic place."],
    "It doesn't look good for a date.": [" a more romantic place.", " a romantic place.", " a more romantic place."],
    "That's not good for a date": [" a more romantic place.", " a romantic place.", " a more romantic place."],
    "How come they only serve that much?": [" larger portions.", " bigger portions.", " larger portions."],
    "It is too loud": [" a more quiet place.", " a quieter place.", " a more quiet place."],
}

SESSION_SCRIPT = ["It doesn't look good for a date", "It has a freaking band!", "I don't really like seafood."]

SHOWCASE_FILLER = [
    "Love the street tacos here.",
    "Best espresso in the neighborhood.",
    "The chocolate cake was heavenly.",
    "Friendly staff and fast refills.",
    "Great brunch menu with fresh juice.",
    "The patio is lovely in the spring.",
    "Wonderful pasta, generous portions.",
    "Yummy dumplings and a great tea list.",
    "Fantastic burgers and crispy fries.",
    "The wine selection is excellent.",
    "Nice views of the river.",
    "Delicious pho, rich broth.",
    "Awesome happy hour deals.",
    "The servers were attentive and fun.",
    "Beautiful decor and cozy booths.",
    "Amazing tacos al pastor.",
    "Great sushi rolls, very fresh fish.",
    "The oysters were incredible.",
    "Wonderful salmon with a crisp skin.",
    "Lovely spot for a family lunch.",
]
SHOWCASE_NEGATIVE = [
    "The parking lot was a mess.",
    "Our waiter was rude.",
    "We came on a Tuesday.",
    "The soup was bland.",
    "Prices went up last year.",
]

# Concept bag: a stand-in for a sentence encoder. Each known word spreads
# weight over a few concept axes; unknown words land in hashed residual axes.
CONCEPTS = {
    "fancier": {"fancy": 1.0, "quality": 0.55},
    "fancy": {"fancy": 1.0},
    "upscale": {"fancy": 1.0, "quality": 0.3},
    "elegant": {"fancy": 1.0},
    "classy": {"fancy": 1.0},
    "special": {"fancy": 0.4, "occasion": 0.6},
    "occasion": {"occasion": 1.0, "fancy": 0.3},
    "best": {"quality": 1.0, "fancy": 0.35},
    "superior": {"quality": 1.0, "fancy": 0.45},
    "excellent": {"quality": 0.3, "positive": 0.6},
    "casual": {"casual": 1.0, "family": 0.5, "vibe": 0.5, "comfort": 0.45},
    "cheesy": {"comfort": 1.0, "casual": 0.4},
    "kid": {"family": 1.0, "casual": 0.4},
    "family": {"family": 1.0},
    "ambiance": {"vibe": 1.0},
    "atmosphere": {"vibe": 1.0},
    "decor": {"vibe": 0.6},
    "band": {"music": 1.0, "vibe": 0.8, "nightlife": 0.5},
    "music": {"music": 1.0, "vibe": 0.4},
    "freaking": {"intensity": 1.0},
    "night": {"nightlife": 1.0},
    "loud": {"music": 0.6, "noise": 1.0},
    "quiet": {"quiet": 1.0, "calm": 0.6},
    "quieter": {"quiet": 1.0, "calm": 0.6},
    "alone": {"quiet": 0.8, "calm": 0.5},
    "talk": {"conversation": 1.0, "quiet": 0.55},
    "business": {"conversation": 0.4, "formal": 0.3},
    "seafood": {"seafood": 1.0},
    "shrimps": {"seafood": 1.0},
    "scallops": {"seafood": 1.0},
    "sea": {"seafood": 0.8},
    "bass": {"seafood": 0.8},
    "tuna": {"seafood": 1.0},
    "fish": {"seafood": 1.0},
    "oysters": {"seafood": 1.0},
    "salmon": {"seafood": 1.0},
    "sushi": {"seafood": 0.7},
    "beef": {"beef": 1.0, "meat": 0.6},
    "brisket": {"beef": 0.7, "meat": 0.5},
    "chicken": {"chicken": 1.0, "meat": 0.5},
    "flautas": {"mexican": 1.0},
    "tacos": {"mexican": 1.0},
    "meat": {"meat": 1.0},
    "burgers": {"beef": 0.5, "comfort": 0.5},
    "moist": {"texture": 1.0},
    "tender": {"texture": 1.0, "meat": 0.2},
    "delicious": {"tasty": 1.0},
    "delish": {"tasty": 1.0},
    "yummy": {"tasty": 1.0},
    "date": {"date": 1.0, "romantic": 0.4},
    "romantic": {"romantic": 1.0, "date": 0.6, "calm": 0.2},
    "dinner": {"dining": 1.0, "date": 0.2},
    "good": {"positive": 0.8},
    "great": {"positive": 0.8},
    "awesome": {"positive": 0.8},
    "amazing": {"positive": 0.8},
    "perfect": {"positive": 0.6},
    "portions": {"portion": 1.0},
    "larger": {"portion": 0.7, "size": 1.0},
    "serve": {"service": 0.5},
    "fresh": {"fresh": 1.0},
}
RESIDUAL = 64
CONCEPT_AXES = sorted({axis for w in CONCEPTS.values() for axis in w})


def concept_bag(text):
    axes = {a: i for i, a in enumerate(CONCEPT_AXES)}
    v = [0.0] * (len(CONCEPT_AXES) + RESIDUAL)
    toks = words(text)
    content = [t for t in toks if t not in STOPWORDS] or toks
    for t in content:
        if t in CONCEPTS:
            for axis, w in CONCEPTS[t].items():
                v[axes[axis]] += w
        else:
            v[len(CONCEPT_AXES) + zlib.crc32(t.encode()) % RESIDUAL] += 0.3
    n = math.sqrt(sum(x * x for x in v))
    return [round(x / n, 12) for x in v]


def showcase_set(out):
    rng = random.Random(2022)
    restaurants = [
        {"id": "p01", "name": "Golden Lantern", "metadata": {"cuisine": "dim sum", "price": "$$$"}},
        {"id": "p02", "name": "Casa Verde", "metadata": {"cuisine": "mexican", "price": "$"}},
        {"id": "p03", "name": "The Brisket Barn", "metadata": {"cuisine": "barbecue", "price": "$$"}},
        {"id": "p04", "name": "Harbor Catch", "metadata": {"cuisine": "seafood", "price": "$$"}},
        {"id": "p05", "name": "Maison Claire", "metadata": {"cuisine": "french", "price": "$$$$"}},
        {"id": "p06", "name": "Slice Garage", "metadata": {"cuisine": "pizza", "price": "$"}},
        {"id": "p07", "name": "Blue Note Tavern", "metadata": {"cuisine": "american", "price": "$$"}},
        {"id": "p08", "name": "Quiet Pine", "metadata": {"cuisine": "japanese", "price": "$$$"}},
    ]
    table_sentences = []
    for row in TABLE:
        table_sentences += row["crit_arguments"] + row["pref_arguments"]
    # "It has an awesome atmosphere." shows up twice in the table: keep two reviews with it.
    table_sentences.append("It has an awesome atmosphere.")
    table_sentences.append(SINGLE_TURN["argument"])
    reviews = assign_reviews(table_sentences + SHOWCASE_FILLER, restaurants, "pr", rng, 2, 3, fillers=SHOWCASE_NEGATIVE)
    reviews.append({"id": "pr9001", "restaurant_id": "p06", "rating": 2, "sentences": ["Awesome ambiance!", "The crust was burnt."]})
    reviews.append({"id": "pr9002", "restaurant_id": "p07", "rating": 1, "sentences": ["Terrible service.", "Never again."]})
    write_jsonl(out / "restaurants.jsonl", restaurants)
    write_jsonl(out / "reviews.jsonl", review_rows(reviews))

    cands = candidates_of(reviews)
    for row in TABLE:
        for s in row["bolded"]:
            assert positivity(s) >= 0.7, s
    pairs = [(cid, s) for cid, s, _ in cands]

    # statements the tests and demo search with
    statements = set()
    for row in TABLE + [SINGLE_TURN]:
        c, p = row["critique"], row["preference"]
        for crit in {c, c.rstrip("."), terminate(c)}:
            statements.update([crit, f"{crit} {p}"])
        statements.add(p)
    for crit in SHOWCASE_COMPLETIONS:
        statements.add(crit)
        pref = "I prefer" + SHOWCASE_COMPLETIONS[crit][0].rstrip(".") + "."
        statements.update([pref, f"{crit} {pref}"])
    prefs = ["I prefer" + SHOWCASE_COMPLETIONS[c][0].rstrip(".") + "." for c in SESSION_SCRIPT]
    for n in range(1, len(SESSION_SCRIPT) + 1):
        statements.add(compound(prefs[:n]))
        statements.add(compound(SESSION_SCRIPT[:n]))

    for row in TABLE:
        top = ranked(concept_bag(row["preference"]), pairs, concept_bag)[:3]
        got = [s for _, s, _ in top]
        for b in row["bolded"]:
            assert b in got, (row["preference"], got)
    fig = ranked(concept_bag(SINGLE_TURN["preference"]), pairs, concept_bag)
    assert fig[0][1] == SINGLE_TURN["argument"], fig[:3]

    texts = sorted({s for r in reviews for s in r["sentences"]} | statements)
    write_jsonl(out / "embeddings.jsonl", [{"text": t, "vector": concept_bag(t)} for t in texts])

    exs = exemplars()
    write_jsonl(
        out / "interpreter_cassette.jsonl",
        [{"prompt": build_prompt(c, exs), "completions": comps} for c, comps in sorted(SHOWCASE_COMPLETIONS.items())],
    )
    write_json(
        out / "cases.json",
        {"cases": [{k: row[k] for k in ("critique", "preference", "crit_arguments", "pref_arguments", "bolded")} for row in TABLE],
         "single_turn": {k: SINGLE_TURN[k] for k in ("critique", "preference", "argument")},
         "session_script": SESSION_SCRIPT},
    )
    rules = [{"match": c.rstrip(".!?").lower(), "completion": comps[0]} for c, comps in sorted(SHOWCASE_COMPLETIONS.items())]
    write_jsonl(out / "rules.jsonl", rules)


# ---------------------------------------------------------------------------
# ablation set: aspect families built around the three error patterns

FAMILIES = [
    # polar opposites
    dict(good="fancy", bad="casual", cat="style", completion=" a fancier place.",
         critiques=["It looks too casual.", "Way too casual for our anniversary.", "This is a little casual."],
         decoys=["Casual and fun, we loved it!", "Great casual vibe.", "Nice and casual, great for a quick bite.",
                 "Our anniversary was wonderful here."],
         accurate=["Much fancier than the usual, truly elegant.", "The fancier dining room is stunning.",
                   "A fancier night out with perfect service."]),
    dict(good="affordable", bad="expensive", cat="price", completion=" a more affordable place.",
         critiques=["It's really expensive.", "Those prices are expensive.", "Expensive for what you get."],
         decoys=["Expensive but worth every penny!", "A bit expensive, yet delicious.", "Expensive wine list, but excellent."],
         accurate=["Very affordable and tasty.", "Affordable lunch specials, great value.", "Good meals at affordable prices."]),
    dict(good="bright", bad="dark", cat="style", completion=" a bright and airy place.",
         critiques=["It's too dark in there.", "The room is so dark.", "Dark and gloomy inside."],
         decoys=["Dark lighting but amazing steaks.", "Love the dark wood decor.", "Dark inside and wonderful cocktails."],
         accurate=["Bright and airy, lovely patio.", "So bright and cheerful, great brunch.", "Airy dining room with lovely sunlight."]),
    dict(good="relaxed", bad="formal", cat="style", completion=" a more relaxed place.",
         critiques=["Way too formal.", "Too pretentious for me.", "The dress code is so formal."],
         decoys=["Formal service, excellent wine.", "Elegant and formal, a delight.", "Pretentious menu names but delicious plates."],
         accurate=["Relaxed and welcoming, wonderful staff.", "Very relaxed vibe, great coffee.", "Relaxed patio, perfect afternoons."]),
    dict(good="mild", bad="spicy", cat="flavor", completion=" milder dishes.",
         critiques=["Everything is so spicy.", "My mouth was on fire.", "The curry is too spicy."],
         decoys=["Spicy and delicious!", "Love the spicy noodles.", "Great fire grilled wings.", "The green curry is amazing."],
         accurate=["Milder dishes for the kids, very friendly.", "Nice milder dishes on request.", "They made it milder for me, wonderful."]),
    dict(good="hot", bad="cold", cat="temperature", completion=" meals served hot.",
         critiques=["My soup was cold.", "The plates came out cold.", "Everything was lukewarm."],
         decoys=["Cold beer and great soup!", "Amazing cold brew coffee.", "Love the cold noodles."],
         accurate=["Everything served piping hot and fresh.", "Hot and delicious meals, straight from the oven.",
                   "Plates came out hot and tasty."]),
    dict(good="open_late", bad="early_close", cat="hours", completion=" a place open late.",
         critiques=["They close too early.", "Everything closes at nine.", "The kitchen shuts down early."],
         decoys=["Early bird special is wonderful.", "Close to the beach, lovely.", "The open kitchen is fun to watch."],
         accurate=["Open late, perfect after a show.", "Great late night menu.", "Open late every night, awesome."]),
    # common sense
    dict(good="quiet", bad="loud", cat="noise", completion=" a more quiet place.",
         critiques=["It has a freaking band!", "There's a live band every night.", "The music is blasting."],
         decoys=["The band was amazing!", "Great live band and fun music.", "Awesome band, we danced all night.", "Loved the music."],
         accurate=["Quiet and cozy, perfect for conversation.", "Nice quiet corner table.", "Lovely quiet evening."]),
    dict(good="romantic", bad="unromantic", cat="occasion", completion=" a more romantic place.",
         critiques=["It doesn't look good for a date.", "That's not good for a date.", "Not a date spot."],
         decoys=["Good portions, good value.", "Great date shakes!", "Good coffee and great pastries."],
         accurate=["Perfect for a romantic dinner.", "Romantic candlelit tables, lovely.", "So romantic, great wine."]),
    dict(good="spacious", bad="crowded", cat="space", completion=" a more spacious place.",
         critiques=["It's always packed.", "Too crowded on weekends.", "We were squeezed in like sardines."],
         decoys=["Always packed, the tapas are that good!", "Crowded but fun.", "Packed with happy locals.", "Amazing grilled sardines."],
         accurate=["Spacious booths and great service.", "Very spacious, comfy seating.", "Spacious dining room, lovely decor."]),
    dict(good="fast", bad="slow", cat="service", completion=" faster service.",
         critiques=["The service is so slow.", "We waited forever.", "It took an hour to get our plates."],
         decoys=["Slow cooked ribs, amazing!", "Slow roasted pork is the best.", "Happy hour is fantastic!"],
         accurate=["Faster service than anywhere nearby, great staff.", "Fast and friendly service.",
                   "Our orders arrived fast, excellent service."]),
    dict(good="adult", bad="kids", cat="crowd", completion=" a more adult place.",
         critiques=["It's full of screaming kids.", "Too many kids running around.", "It feels like a daycare."],
         decoys=["Great for kids, friendly staff.", "The kids menu is wonderful.", "Our kids loved running around the garden."],
         accurate=["Adult crowd and classy cocktails.", "A grown up, adult atmosphere, lovely.", "Perfect adult night out."]),
    dict(good="portions", bad="small", cat="portion", completion=" larger portions.",
         critiques=["How come they only serve that much?", "The portions are tiny.", "I left hungry."],
         decoys=["Tiny cozy cafe, lovely.", "Come hungry, everything is tasty!", "They serve great espresso."],
         accurate=["Larger portions than anywhere else, delicious.", "Generous, larger portions.", "Huge portions, amazing value."]),
    dict(good="bar", bad="no_alcohol", cat="drinks", completion=" a place with a full bar.",
         critiques=["They don't serve alcohol.", "No beer or wine here.", "It's a dry restaurant."],
         decoys=["Great alcohol free cocktails.", "Amazing dry rub ribs.", "Root beer floats are heavenly."],
         accurate=["Full bar and excellent cocktails.", "The bar is fun, great bartenders.", "Nice full bar selection."]),
    dict(good="clean", bad="dirty", cat="hygiene", completion=" a cleaner place.",
         critiques=["The tables are sticky.", "The bathroom was gross.", "Everything feels grimy."],
         decoys=["Sticky toffee pudding is heavenly!", "Great tables outside.", "Love the bathroom art, very fun."],
         accurate=["Cleaner than most, spotless tables.", "A cleaner room after the remodel, lovely.", "Spotless and cleaner than ever, great."]),
    # category filters
    dict(good="beef_chicken", bad="seafood", cat="protein", completion=" beef or chicken.",
         critiques=["I don't really like seafood.", "I'm not into seafood.", "No seafood for me."],
         decoys=["Excellent seafood platter.", "The seafood was incredibly fresh!", "Best seafood in town.",
                 "Everything delicious with an exception of of the shrimps."],
         accurate=["Great beef brisket.", "The chicken was juicy and tender.", "I only eat Beef Brisket here because is delicious!",
                   "Chicken flautas are always delish.", "Chicken moist and tender."]),
    dict(good="vegetarian", bad="meat", cat="diet", completion=" more vegetarian options.",
         critiques=["Everything has meat in it.", "It's all meat here.", "My wife doesn't eat meat."],
         decoys=["Meat lovers paradise!", "Best meat platter around.", "Great meat, perfectly cooked."],
         accurate=["Lots of vegetarian options, all delicious.", "Great vegetarian options.", "Wonderful vegetarian curry."]),
    dict(good="healthy", bad="fried", cat="diet", completion=" healthier options.",
         critiques=["Everything is fried.", "So greasy.", "Too much grease."],
         decoys=["Amazing fried chicken!", "Best fried pickles ever.", "Fried dough with honey, yummy."],
         accurate=["Healthier choices and fresh bowls.", "Healthier bowls, really fresh.", "Fresh healthier menu, great smoothies."]),
    dict(good="flavorful", bad="bland", cat="flavor", completion=" more flavorful dishes.",
         critiques=["The sauce is so bland.", "Pretty bland cooking.", "It needs more seasoning."],
         decoys=["Home cooking at its best.", "Great sauce on the wings.", "Perfect seasoning on the fries."],
         accurate=["Bold and flavorful dishes, amazing.", "Every plate is flavorful and fresh.", "So flavorful, the spices are perfect."]),
    dict(good="light_dessert", bad="sweet", cat="dessert", completion=" lighter desserts.",
         critiques=["Everything is too sweet.", "The desserts are so sugary.", "Way too much sugar."],
         decoys=["Sweet staff, lovely.", "Sweet potato fries are amazing!", "Sugar cookies were delightful."],
         accurate=["Lighter desserts, perfect finish.", "Lovely lighter desserts.", "The lighter desserts are delightful."]),
]

ABLATION_FILLER = [
    "Great experience overall.",
    "We will definitely be back, loved it.",
    "Highly recommend this gem.",
    "The staff were lovely.",
    "A wonderful neighborhood favorite.",
]
ABLATION_NEGATIVE = [
    "The parking was terrible.",
    "Our server seemed rushed.",
    "We went on a Monday.",
    "The menu changes often.",
]

ASPECT_CATEGORY_EXTRA = {"generic": "generic"}


def ablation_set(out):
    rng = random.Random(17)
    names = ["Amber Fork", "Birch & Vine", "Copper Kettle", "Dockside", "Ember Room", "Fig Tree", "Granite Grill",
             "Hollow Oak", "Indigo Table", "Juniper House", "Kiln Kitchen", "Lark Bistro"]
    restaurants = [{"id": f"a{i + 1:02}", "name": n, "metadata": {}} for i, n in enumerate(names)]

    aspects = {}
    categories = {}
    singles = []
    rules = []
    queries = {}
    for fi, fam in enumerate(FAMILIES):
        categories[fam["good"]] = fam["cat"]
        categories[fam["bad"]] = fam["cat"]
        for s in fam["decoys"]:
            aspects.setdefault(s, set()).add(fam["bad"])
        for s in fam["accurate"]:
            aspects.setdefault(s, set()).add(fam["good"])
        for ci, c in enumerate(fam["critiques"]):
            sid = f"u{fi + 1:02}{ci + 1}"
            pref = "I prefer" + fam["completion"].rstrip()
            singles.append({"id": sid, "critique": c, "preference": pref, "rounds": 1, "parts": [], "source": "USER_STUDY"})
            rules.append({"match": c.rstrip(".!?").lower(), "completion": fam["completion"]})
            queries[sid] = [fam["good"]]
    # cross-family facts
    aspects["Amazing fried chicken!"].add("beef_chicken")
    aspects["Dark lighting but amazing steaks."].add("beef_chicken")
    aspects["Great meat, perfectly cooked."].add("beef_chicken")
    aspects["Plates came out hot and tasty."].add("hot")

    for s in list(aspects) + ABLATION_FILLER:
        assert positivity(s) >= 0.7, (s, positivity(s))
    for s in ABLATION_NEGATIVE:
        assert positivity(s) < 0.7, s

    designed = list(aspects)
    reviews = assign_reviews(designed, restaurants, "ar", rng, 2, 4, fillers=ABLATION_FILLER + ABLATION_NEGATIVE)
    reviews.append({"id": "ar9001", "restaurant_id": "a01", "rating": 2, "sentences": ["Great casual vibe.", "The fries were soggy."]})
    reviews.append({"id": "ar9002", "restaurant_id": "a05", "rating": 3, "sentences": ["Quiet and cozy, perfect for conversation."]})
    for s in ABLATION_FILLER + ABLATION_NEGATIVE:
        aspects.setdefault(s, set())

    write_jsonl(out / "restaurants.jsonl", restaurants)
    write_jsonl(out / "reviews.jsonl", review_rows(reviews))
    write_jsonl(out / "singles.jsonl", singles)
    write_jsonl(out / "rules.jsonl", rules)
    judge = {
        "sentences": {s: sorted(a) for s, a in sorted(aspects.items())},
        "queries": dict(sorted(queries.items())),
        "categories": dict(sorted(categories.items())),
    }
    write_json(out / "judge.json", judge)

    # sanity check of the ablation gap on singles with the hash-bag embedder
    cands = candidates_of(reviews)
    pairs = [(cid, s) for cid, s, _ in cands]
    hits = {"crit": 0, "pref": 0}
    for q in singles:
        want = set(queries[q["id"]])
        for mode, st in (("crit", q["critique"]), ("pref", q["preference"])):
            top = ranked(hashbag(st), pairs, hashbag)[0]
            hits[mode] += bool(aspects[top[1]] & want)
    assert hits["pref"] >= 2 * hits["crit"] and hits["pref"] > 0, hits

    # two annotators over a sample of (query, candidate) pairs
    by_sentence = {}
    for cid, s, _ in cands:
        by_sentence.setdefault(s, cid)
    sample = []
    ids = sorted(queries)
    for _ in range(100):
        q = rng.choice(ids)
        cid, s, _ = rng.choice(cands)
        sample.append((q, cid, s))
    labels = []
    seen = set()
    for q, cid, s in sample:
        if (q, cid) in seen:
            continue
        seen.add((q, cid))
        want = set(queries[q])
        has = aspects[s]
        grade = 3 if has & want else (2 if {categories.get(a) for a in has} & {categories[w] for w in want} else 1)
        labels.append({"query_id": q, "candidate_id": cid, "annotator": "a1", "binary": grade == 3, "grade": grade})
        g2 = grade
        if rng.random() < 0.12:
            g2 = rng.choice([g for g in (1, 2, 3) if g != grade])
        labels.append({"query_id": q, "candidate_id": cid, "annotator": "a2", "binary": g2 == 3, "grade": g2})
    write_jsonl(out / "labels.jsonl", labels)
    return hits


# ---------------------------------------------------------------------------
# 340 single critiques for compound generation

DISLIKE_TEMPLATES = [
    "I don't really like {x}.",
    "I'm not a fan of {x}.",
    "I'm sick of {x}.",
    "No more {x} for me.",
    "I'm not in the mood for {x}.",
]
FOODS = {
    "seafood": "I prefer beef or chicken.",
    "fish": "I prefer beef or chicken.",
    "chicken": "I prefer seafood or beef.",
    "beef": "I prefer chicken or fish.",
    "pork": "I prefer chicken or fish.",
    "steak": "I prefer lighter dishes.",
    "burgers": "I prefer healthier options.",
    "vegetables": "I prefer more hearty dishes.",
    "salad": "I prefer more filling dishes.",
    "spicy food": "I prefer milder food.",
    "fried food": "I prefer healthier options.",
    "pizza": "I prefer something other than pizza.",
    "pasta": "I prefer lighter dishes.",
    "sushi": "I prefer cooked dishes.",
    "tacos": "I prefer a sit down meal.",
    "buffets": "I prefer made to order dishes.",
    "chain restaurants": "I prefer local places.",
    "barbecue": "I prefer lighter dishes.",
    "lamb": "I prefer chicken or fish.",
    "curry": "I prefer milder food.",
    "noodles": "I prefer rice dishes.",
    "soup": "I prefer heartier dishes.",
    "cheese": "I prefer dairy free options.",
    "bread": "I prefer gluten free options.",
    "desserts": "I prefer savory dishes.",
    "brunch": "I prefer a dinner place.",
}
ADJ_TEMPLATES = [
    "It's too {x}.",
    "It looks so {x}.",
    "This place is way too {x}.",
    "It feels {x}.",
    "Way too {x} for me.",
]
ADJECTIVES = {
    "loud": "I prefer a more quiet place.",
    "noisy": "I prefer a more quiet place.",
    "crowded": "I prefer a more spacious place.",
    "packed": "I prefer a less busy place.",
    "quiet": "I prefer a livelier place.",
    "dead": "I prefer a livelier place.",
    "empty": "I prefer a busier place.",
    "boring": "I prefer a more exciting place.",
    "casual": "I prefer a fancier place.",
    "plain": "I prefer a more stylish place.",
    "shabby": "I prefer a nicer place.",
    "fancy": "I prefer a more casual place.",
    "formal": "I prefer a more relaxed place.",
    "stuffy": "I prefer a more relaxed place.",
    "pretentious": "I prefer a down to earth place.",
    "upscale": "I prefer a more casual place.",
    "expensive": "I prefer a more affordable place.",
    "pricey": "I prefer a more affordable place.",
    "overpriced": "I prefer better value.",
    "dark": "I prefer a brighter place.",
    "bright": "I prefer a dimmer place.",
    "cramped": "I prefer a more spacious place.",
    "cold": "I prefer a warmer place.",
    "hot": "I prefer a cooler place.",
    "far": "I prefer a place closer by.",
    "touristy": "I prefer a local favorite.",
    "sterile": "I prefer a cozier place.",
    "old fashioned": "I prefer a more modern place.",
    "trendy": "I prefer a more classic place.",
    "small": "I prefer a bigger place.",
    "busy": "I prefer a calmer place.",
    "dirty": "I prefer a cleaner place.",
    "fussy": "I prefer a simpler place.",
    "gloomy": "I prefer a cheerful place.",
    "chaotic": "I prefer a calmer place.",
}
MISC = [
    ("There's a freaking band.", "I prefer a more quiet place."),
    ("The music is blasting.", "I prefer a more quiet place."),
    ("They play loud music.", "I prefer a more quiet place."),
    ("It smells like a sports bar.", "I prefer a more refined place."),
    ("It doesn't look good for a date.", "I prefer a more romantic place."),
    ("That's not good for a date.", "I prefer a more romantic place."),
    ("It's not kid friendly.", "I prefer a family friendly place."),
    ("There are too many kids.", "I prefer a more adult place."),
    ("The portions are tiny.", "I prefer larger portions."),
    ("How come they only serve that much?", "I prefer larger portions."),
    ("The service is so slow.", "I prefer faster service."),
    ("We waited forever.", "I prefer faster service."),
    ("They don't take reservations.", "I prefer a place that takes reservations."),
    ("There's no parking.", "I prefer a place with parking."),
    ("They don't serve alcohol.", "I prefer a place with a full bar."),
    ("They close too early.", "I prefer a place open late."),
    ("The menu is tiny.", "I prefer a bigger menu."),
    ("There's no outdoor seating.", "I prefer a place with a patio."),
    ("The tables are sticky.", "I prefer a cleaner place."),
    ("It's full of tourists.", "I prefer a local favorite."),
    ("I'm not a big meat eater.", "I prefer more vegetarian options."),
    ("I'm a vegetarian.", "I prefer more vegetarian options."),
    ("I'm vegan.", "I prefer vegan options."),
    ("Everything is drenched in sauce.", "I prefer lighter dishes."),
    ("The coffee is burnt.", "I prefer better coffee."),
    ("The desserts are too sweet.", "I prefer lighter desserts."),
    ("The wine list is tiny.", "I prefer a bigger wine list."),
    ("It's a long drive.", "I prefer a place closer by."),
    ("The chairs are uncomfortable.", "I prefer comfier seating."),
    ("The lighting is harsh.", "I prefer softer lighting."),
    ("It's too hot and spicy.", "I prefer milder food."),
    ("The food is so bland.", "I prefer more flavorful food."),
    ("It's kind of flavorless.", "I prefer more flavorful food."),
    ("The staff ignored us.", "I prefer friendlier service."),
    ("It's always sleepy in here.", "I prefer a livelier place."),
    ("They only have a buffet.", "I prefer made to order dishes."),
]


def dataset_singles(out):
    rows = []
    seen = set()

    def add(c, p):
        if c in seen:
            return
        seen.add(c)
        rows.append({"id": f"s{len(rows) + 1:03}", "critique": c, "preference": p, "rounds": 1, "parts": [], "source": "ADAPTED"})

    for x, p in FOODS.items():
        for t in DISLIKE_TEMPLATES:
            add(t.format(x=x), p)
    for x, p in ADJECTIVES.items():
        for t in ADJ_TEMPLATES:
            add(t.format(x=x), p)
    for c, p in MISC:
        add(c, p)
    assert len(rows) >= 340, len(rows)
    rows = rows[:340]
    crits = {r["critique"] for r in rows}
    assert "I'm not a big meat eater." in crits and "I'm not in the mood for vegetables." in crits
    write_jsonl(out / "singles.jsonl", rows)
    return len(rows)


# ---------------------------------------------------------------------------
# golden files

GOLDEN_SEGMENTS = [
    ("Great food. Friendly staff!", ["Great food.", "Friendly staff!"]),
    ("Perfect for a romantic dinner.", ["Perfect for a romantic dinner."]),
    ("Dr. Patel recommended it. We loved it.", ["Dr. Patel recommended it.", "We loved it."]),
    ("Rated 4.5 stars... \"Best ever!\" she said. Wow?!", ["Rated 4.5 stars...", "\"Best ever!\"", "she said.", "Wow?!"]),
    ("We went with Mrs. Smith and J. Doe. Lovely night.", ["We went with Mrs. Smith and J. Doe.", "Lovely night."]),
    ("No punctuation at the end", ["No punctuation at the end"]),
    ("Line one\nLine two.", ["Line one", "Line two."]),
    ("Is it good? Yes! Very.", ["Is it good?", "Yes!", "Very."]),
    ("Cost was $12.50 per plate. Worth it.", ["Cost was $12.50 per plate.", "Worth it."]),
    ("  Leading and trailing spaces.   ", ["Leading and trailing spaces."]),
    ("The St. Louis ribs were great. Try them.", ["The St. Louis ribs were great.", "Try them."]),
    ("Amazing!!! Will return.", ["Amazing!!!", "Will return."]),
    ("He said (and I agree.) It rocks.", ["He said (and I agree.)", "It rocks."]),
    ("Open e.g. on Sundays. Nice.", ["Open e.g. on Sundays.", "Nice."]),
    ("Wait… what? Oh well.", ["Wait…", "what?", "Oh well."]),
    ("Visit www.example.com for menus. Great.", ["Visit www.example.com for menus.", "Great."]),
    ("Loved it.Really.", ["Loved it.Really."]),
    ("Ten out of 10. Again next week.", ["Ten out of 10.", "Again next week."]),
    ("", []),
    ("First.\n\nSecond!", ["First.", "Second!"]),
]


def golden(out):
    exs = exemplars()
    (out / "prompt_default.txt").parent.mkdir(parents=True, exist_ok=True)
    (out / "prompt_default.txt").write_text(build_prompt("It doesn't look good for a date", exs))
    write_jsonl(out / "segmentation.jsonl", [{"text": t, "sentences": s} for t, s in GOLDEN_SEGMENTS])


def main():
    showcase_set(ROOT / "showcase")
    hits = ablation_set(ROOT / "ablation")
    n = dataset_singles(ROOT / "dataset")
    golden(ROOT / "golden")
    print(f"showcase set ok; ablation singles P@1 crit={hits['crit']} pref={hits['pref']}; {n} dataset singles")


if __name__ == "__main__":
    main()
