#!/usr/bin/env python3
"""Builds the bundled toy collection, profile files and spell-check dictionary.

Run from the repository root:  python3 scripts/make_toy_collection.py
Output is deterministic for a fixed SEED.
"""

import json
import random
import re
from pathlib import Path

SEED = 20240611
ROOT = Path(__file__).resolve().parent.parent
TOY = ROOT / "data" / "toy"
CORE_DATA = ROOT / "crates" / "core" / "data"

TOPICS = [
    ("2001", "how much money do i need in bangkok"),
    ("2002", "how much magnolia bark to take for anxiety"),
    ("2003", "are landlords liable if someone breaks in and hurts a tenant"),
    ("2004", "was friedrich nietzsche an atheist"),
    ("2005", "how to help a jammed finger"),
]

CORE = {
    "2001": [
        "A budget traveller in Bangkok can get by on roughly 1,000 to 1,500 baht a day.",
        "Street food in Bangkok costs between 40 and 100 baht per meal, which keeps daily spending low.",
        "Mid-range hotels in central Bangkok charge around 1,500 baht a night.",
        "Most visitors to Bangkok spend about 50 US dollars a day on food, transport and lodging.",
        "The Skytrain and metro make getting around Bangkok cheap, with fares under 60 baht.",
        "Plan extra money in Bangkok for temple entry fees, massages and night markets.",
        "Exchange rates in Bangkok are better at independent money changers than at the airport.",
        "A week in Bangkok on a comfortable budget needs around 500 dollars excluding flights.",
        "Tipping is not expected in Bangkok, although rounding up taxi fares is common.",
        "Cash is still king in Bangkok markets, so carry small baht notes.",
        "Backpackers in Bangkok often stay in hostels that cost 300 baht a night.",
        "ATM withdrawals in Thailand carry a fee of 220 baht, so take out larger amounts at once.",
    ],
    "2002": [
        "Typical doses of magnolia bark extract for anxiety range from 200 to 400 mg per day.",
        "Magnolia bark contains honokiol and magnolol, compounds that act on GABA receptors and may reduce anxiety.",
        "A small trial found that magnolia bark combined with phellodendron lowered anxiety in stressed women.",
        "Most studies of magnolia bark for anxiety used 250 mg taken two or three times daily.",
        "Magnolia bark supplements should not be combined with sedatives because of added drowsiness.",
        "Start with a low dose of magnolia bark, since higher amounts can cause sleepiness.",
        "Pregnant women should avoid magnolia bark because its safety has not been established.",
        "Research on magnolia bark for anxiety is promising but limited to small human trials.",
        "Magnolia bark has been used in traditional Chinese medicine for centuries to calm the mind.",
        "Honokiol from magnolia bark showed anxiety-reducing effects in animal studies without memory problems.",
        "Talk to a doctor before taking magnolia bark if you already use medication for anxiety.",
        "Magnolia bark tea is weaker than standardized extract capsules for treating anxiety.",
    ],
    "2003": [
        "Landlords can be liable when a tenant is hurt during a break-in if they failed to provide reasonable security.",
        "Courts ask whether the criminal attack was foreseeable and whether the landlord ignored broken locks.",
        "A landlord who promises security measures may be liable if those measures are not maintained.",
        "Tenants injured by intruders must usually prove the landlord was negligent in repairing doors or lights.",
        "Prior crimes at a building make a break-in foreseeable and increase landlord liability.",
        "Many states require landlords to install deadbolts and working locks on every unit.",
        "Landlords are generally not liable for crimes by strangers unless their negligence made the crime easier.",
        "Broken entry gates and poor lighting are common grounds for premises liability claims against landlords.",
        "An injured tenant may sue the landlord for medical bills and lost wages after an assault.",
        "Lease clauses that waive landlord liability for negligence are often unenforceable.",
        "Document repair requests in writing, since they show the landlord knew about the security problem.",
        "Premises liability law covers injuries to tenants caused by unsafe conditions a landlord controls.",
    ],
    "2004": [
        "Friedrich Nietzsche is widely regarded as an atheist who rejected Christian morality.",
        "Nietzsche declared that God is dead in The Gay Science, describing a cultural loss of faith.",
        "Although raised as the son of a Lutheran pastor, Nietzsche abandoned his faith as a student.",
        "Nietzsche criticised Christianity in The Antichrist as a religion of weakness and resentment.",
        "Some scholars argue Nietzsche was less an atheist than a critic of all absolute values.",
        "Nietzsche wrote that atheism came to him by instinct rather than as the result of argument.",
        "The phrase God is dead expresses Nietzsche's view that belief in God had become unbelievable.",
        "Nietzsche feared that the death of God would lead to nihilism unless new values were created.",
        "Nietzsche's philosophy of the Ubermensch replaces religious meaning with self-overcoming.",
        "Letters from Nietzsche to his sister show his break with her religious views.",
        "Nietzsche attacked both religious believers and the secular moralists who kept Christian values.",
        "Historians of philosophy list Nietzsche among the most influential atheist thinkers of the nineteenth century.",
    ],
    "2005": [
        "To help a jammed finger, apply ice for 15 minutes and keep the hand raised above the heart.",
        "A jammed finger happens when the tip is pushed toward the hand, spraining the middle joint.",
        "Buddy taping a jammed finger to the next finger gives support while the sprain heals.",
        "See a doctor if a jammed finger stays swollen, looks crooked or cannot straighten.",
        "Most jammed fingers heal within one to two weeks with rest, ice and gentle movement.",
        "Do not pull on a jammed finger, because that can worsen a fracture or dislocation.",
        "An X-ray can tell a jammed finger from a broken finger when pain is severe.",
        "Ibuprofen reduces the pain and swelling of a jammed finger in the first few days.",
        "Basketball and volleyball players often jam a finger when catching or blocking the ball.",
        "A splint keeps a badly jammed finger straight so the ligament can heal.",
        "Gentle bending exercises help a jammed finger regain motion once the swelling goes down.",
        "Mallet finger is a tendon injury that can look like a simple jammed finger.",
    ],
}

TANGENTIAL = {
    "2001": [
        "Thailand welcomes millions of tourists every year, many of whom start their trip in the capital.",
        "The Grand Palace is one of the most visited landmarks in the city.",
        "Travel insurance is recommended for any trip to Southeast Asia.",
        "The rainy season in Thailand runs from June to October.",
        "Flights between Europe and Thailand often stop in the Gulf.",
        "Chiang Mai in northern Thailand is known for its old temples.",
    ],
    "2002": [
        "Herbal supplements are not regulated as strictly as prescription drugs.",
        "Anxiety disorders affect millions of adults every year.",
        "Magnolia trees are prized for their large fragrant flowers in spring.",
        "Breathing exercises and regular sleep can ease everyday stress.",
        "Chamomile and lavender are other herbs people try for relaxation.",
        "Cognitive behavioural therapy is an effective treatment for many anxiety disorders.",
    ],
    "2003": [
        "Renters insurance covers personal property stolen during a burglary.",
        "A lease is a contract between a tenant and a property owner.",
        "Burglary rates are higher in buildings without controlled entry.",
        "Tenants have a right to quiet enjoyment of the rented home.",
        "Security deposits must usually be returned within thirty days.",
        "Small claims court handles many disputes between renters and owners.",
    ],
    "2004": [
        "Nineteenth century German philosophy was shaped by Kant and Hegel.",
        "Thus Spoke Zarathustra is written in a poetic and prophetic style.",
        "Existentialist writers later drew on ideas about meaning and freedom.",
        "The philosopher suffered a mental collapse in Turin in 1889.",
        "Schopenhauer's pessimism influenced many young German thinkers.",
        "Debates about religion and science grew sharper after Darwin.",
    ],
    "2005": [
        "Ligaments connect bones to each other and stabilise joints.",
        "Hand injuries are common in contact sports.",
        "Ice packs should be wrapped in a cloth to protect the skin.",
        "The hand contains twenty seven bones.",
        "Sprains are graded by how much the ligament is stretched or torn.",
        "Physical therapists design exercises to restore joint movement.",
    ],
}

DISTRACTORS = [
    "The stock market closed higher on Tuesday after strong earnings from technology companies.",
    "Sourdough bread needs a starter that is fed with flour and water every day.",
    "The new electric car model offers a range of 400 kilometres on a single charge.",
    "Regular pruning keeps fruit trees healthy and improves the harvest.",
    "The city council approved a plan to build a new public library downtown.",
    "Honeybees communicate the location of flowers through a waggle dance.",
    "Learning a second language is easier with daily practice and conversation.",
    "The football team won the championship after a dramatic penalty shootout.",
    "Solar panels convert sunlight into electricity using photovoltaic cells.",
    "A balanced diet includes vegetables, whole grains and lean protein.",
    "The museum opened an exhibition of impressionist paintings this spring.",
    "Volcanic eruptions can affect global temperatures for several years.",
    "Good password habits protect online accounts from hackers.",
    "Whales migrate thousands of kilometres between feeding and breeding grounds.",
    "Composting kitchen waste reduces landfill and enriches garden soil.",
    "The orchestra performed a symphony by Beethoven to a full concert hall.",
    "Interest rates influence how much people pay for mortgages and car loans.",
    "The novel follows a young detective solving crimes in Victorian London.",
    "Cats sleep for up to sixteen hours a day.",
    "Rainforests are home to more than half of the world's plant and animal species.",
    "Chess players train by studying openings and solving tactical puzzles.",
    "The bakery on the corner sells fresh croissants every morning.",
    "Mountain hikers should carry water, a map and warm clothing.",
    "Smartphones now have cameras that rival professional equipment.",
    "The river flooded after a week of heavy rain in the valley.",
    "Coffee beans are roasted to develop their flavour and aroma.",
    "Children learn to read faster when parents read aloud with them.",
    "The airline added new routes to several cities in South America.",
    "Ancient Romans built aqueducts to carry water into their cities.",
    "Yoga improves flexibility, balance and strength over time.",
]

# Extra everyday vocabulary for the spell-check dictionary.
COMMON_WORDS = """
a able about above accept across act action actually add address after again against age ago agree
ahead air all allow almost alone along already also although always am among amount an and animal
another answer any anyone anything appear apply are area arm around arrive art as ask at attack away
baby back bad bag ball bank bar base be bear beat beautiful because become bed been before begin
behind believe best better between big bill bit black blood blue board boat body book born both box
boy break bring brother build building business but buy by call came camera can car card care carry
case catch cause cell center central century certain chair chance change charge check child children
choice choose church city claim class clear close cold college color come common company compare
complete computer condition consider contain continue control cook cool copy corner cost could count
country couple course court cover create crime cup current cut dark data daughter day dead deal
death decide deep degree describe design detail develop die difference different difficult dinner
direction discover discuss disease do doctor dog door down draw dream dress drink drive drop drug
during each early earth easy eat economy edge education effect effort eight either else end energy
enjoy enough enter entire environment especially even evening event ever every everyone everything
exactly example exercise expect experience explain eye face fact fail fall family far farm fast
father fear feel feeling few field fight figure fill film final finally find fine finger finish fire
first fish five floor fly follow food foot for force foreign forget form forward four free friend
from front full fun future game garden gas general get girl give glass go goal good government great
green ground group grow growth guess gun guy hair half hand hang happen happy hard has hat have he
head health hear heart heat heavy help her here herself high him himself his history hit hold home
hope horse hospital hot hotel hour house how however huge human hundred husband i idea if image
imagine important improve in include increase indeed information inside instead interest into issue
it item its itself job join just keep key kid kill kind kitchen know knowledge land language large
last late later laugh law lawyer lay lead learn least leave left leg less let letter level lie life
light like likely line list listen little live local long look lose loss lot love low machine main
major make man manage many market marriage material matter may maybe me mean measure meet meeting
member memory mention message method middle might mile military milk million mind minute miss model
modern moment money month more morning most mother mouth move movie much music must my myself name
nation national natural nature near nearly necessary need network never new news newspaper next nice
night nine no none nor north not note nothing notice now number of off offer office officer often oh
oil ok okay old on once one only onto open operation opportunity option or order other others our out
outside over own owner page pain paint paper parent part party pass past patient pay peace people per
perform perhaps period person phone pick picture piece place plan plant play player please point
police policy poor popular population position positive possible power practice prepare present
pretty prevent price private probably problem process produce product program project property
protect prove provide public pull purpose push put question quick quickly quite race radio raise
range rate rather reach read ready real reality really reason receive recent recently record red
reduce region relate remain remember remove report represent require research resource respond rest
result return reveal rich right rise risk road rock role room rule run safe same save say scene school
science sea season seat second section see seek seem sell send sense serious serve service set seven
several shake share she short shot should shoulder show side sign similar simple simply since sing
single sister sit site situation six size skill skin small smile so social society some someone
something sometimes son song soon sort sound source south space speak special spend sport spring
staff stage stand standard star start state station stay step still stock stop store story strategy
street strong student study stuff style subject success successful such suddenly suffer suggest
summer support sure surface system table take talk task tax teach teacher team tell ten tend term test
than thank that the their them themselves then theory there these they thing think third this those
though thought thousand three through throw thus time to today together tonight too top total tough
toward town trade traditional training travel treat treatment tree trial trip trouble true truth try
turn tv two type under understand unit until up upon us use usually value various very victim view
visit voice vote wait walk wall want war watch water way we weapon wear week weight well west what
whatever when where whether which while white who whole whom whose why wide wife will win wind window
wish with within without woman wonder word work worker world worry would write writer wrong yard
yeah year yes yet you young your yourself
whats tips info pls kids
"""

PROFILES = {
    "persona": [
        ("emily", "Emily", "Emily is a 34-year-old marine biologist with a PhD. English is her first language. She searches on a laptop at work and writes precise, technical queries using scientific vocabulary."),
        ("ahmed", "Ahmed", "Ahmed is a 45-year-old journalist from Cairo with a university degree. Arabic is his first language and he is fluent in English. He searches on his phone for facts, sources and background for his articles."),
        ("anne", "Anne", "Anne is a 68-year-old retired nurse. English is her first language. She prefers voice search on her smart speaker and asks complete, polite questions."),
        ("antonio", "Antonio", "Antonio is a 29-year-old chef from Naples who finished secondary school. Italian is his first language and his English is basic. He types short queries on his phone."),
        ("priya", "Priya", "Priya is a 40-year-old primary school teacher. Hindi and English are her first languages. She writes natural language questions on a tablet and likes clear explanations."),
        ("noah", "Noah", "Noah is a 10-year-old boy in fifth grade. English is his first language. He asks questions the way he talks, uses simple words and often misspells longer words."),
    ],
    "group": [
        ("child", "Child", "A child aged 8 to 12 with a limited vocabulary who writes simple, informal queries and makes spelling mistakes."),
        ("senior", "Senior", "An adult over 65 who writes complete, polite questions and prefers familiar, everyday words."),
        ("non-native", "Non-native", "An adult whose first language is not English, who uses simple vocabulary and sometimes non-standard grammar."),
        ("native", "Native", "An adult native English speaker who writes fluent queries and uses idiomatic expressions."),
        ("novice", "Novice", "A person with no background in the topic who describes it in everyday terms and asks for basic explanations."),
        ("expert", "Expert", "A domain expert who uses precise technical terminology and looks for detailed, authoritative sources."),
        ("mobile", "Mobile", "A person searching on a small phone screen who types short keyword queries."),
        ("voice", "Voice", "A person speaking to a voice assistant who asks long, conversational questions."),
    ],
    "textual": [
        ("paraphrasing", "Paraphrasing", "Rewrite the query with different words and structure while keeping its meaning."),
        ("order", "Order", "Use exactly the words of the seed query but change their order."),
        ("naturality", "Naturality", "Turn the query into a natural language question or request."),
        ("misspelling", "Misspelling", "Keep the query but introduce realistic spelling mistakes in one or more words."),
    ],
}

HUMAN_JUDGED_FRACTION = 0.7
RUN_DEPTH = 30


def tokens(text):
    return re.findall(r"[a-z]+", text.lower())


def build_passages(rng):
    passages = []  # (pid, text, topic or None, grade)

    def add(text, topic, grade):
        pid = f"p{len(passages) + 1:03d}"
        passages.append((pid, text, topic, grade))

    for tid, _ in TOPICS:
        core = CORE[tid]
        tang = TANGENTIAL[tid]
        for _ in range(8):
            add(" ".join(rng.sample(core, 3)), tid, 3)
        for _ in range(8):
            add(" ".join([rng.choice(core), rng.choice(tang), rng.choice(DISTRACTORS)]), tid, 2)
        for _ in range(6):
            add(" ".join([rng.choice(tang), *rng.sample(DISTRACTORS, 2)]), tid, 1)
        for _ in range(6):
            add(" ".join(rng.sample(DISTRACTORS, 3)), tid, 0)
    while len(passages) < 200:
        add(" ".join(rng.sample(DISTRACTORS, 2 + rng.randrange(2))), None, 0)
    order = list(range(len(passages)))
    rng.shuffle(order)
    shuffled = []
    for new_idx, old_idx in enumerate(order):
        _, text, topic, grade = passages[old_idx]
        shuffled.append((f"p{new_idx + 1:03d}", text, topic, grade))
    return shuffled


def true_grade(passage, tid):
    _, _, topic, grade = passage
    return grade if topic == tid else 0


def profile_ids():
    ids = [pid for method in PROFILES.values() for pid, _, _ in method]
    return ids + ["neutral"]


# Per-profile difficulty: extra ranking noise for the noisier query styles.
PROFILE_NOISE = {"child": 0.5, "misspelling": 0.6, "mobile": 0.3, "noah": 0.4, "antonio": 0.3, "voice": 0.2}


def fixture_run(passages, system, strength, noise, rng):
    lines = []
    query_ids = []
    for tid, _ in TOPICS:
        query_ids.append(tid)
        for prof in profile_ids():
            for idx in (1, 2, 3):
                query_ids.append(f"{tid}:{prof}:{idx}")
    for qid in query_ids:
        tid = qid.split(":")[0]
        prof = qid.split(":")[1] if ":" in qid else "seed"
        sd = noise + PROFILE_NOISE.get(prof, 0.0)
        scored = []
        for p in passages:
            s = strength * true_grade(p, tid) + rng.gauss(0.0, sd)
            scored.append((round(s + 10.0, 4), p[0]))
        scored.sort(key=lambda x: (-x[0], x[1]))
        for rank, (score, pid) in enumerate(scored[:RUN_DEPTH], start=1):
            lines.append(f"{qid} Q0 {pid} {rank} {score:.4f} {system}")
    return lines


def annotations(rng):
    """A small similarity/alignment sample with gold questions; annotator a4 fails one gold."""
    recs = []
    annotators = ["a1", "a2", "a3", "a4"]
    golds = [
        ("what foods should you stay away from if you have asthma", "what types of food is good for fat loss?", "dissimilar"),
        ("how to help a jammed finger", "jammed finger treatment", "similar"),
    ]
    for g, (seed, variant, ans) in enumerate(golds):
        for a in annotators:
            given = ans if not (a == "a4" and g == 0) else "similar"
            recs.append(dict(pair_id=f"gold{g + 1}", annotator_id=a, task="similarity", seed_query=seed,
                             variant=variant, answer=given, is_gold=True, gold_answer=ans))
    pair = 0
    for tid, seed in TOPICS:
        for prof, name in [("emily", "Emily"), ("noah", "Noah"), ("child", "Child"), ("order", "Order")]:
            pair += 1
            pa, pb = (annotators[pair % 2], annotators[2 + pair % 2])
            variant = f"{seed} ({name.lower()} variant)"
            for a in (pa, pb):
                sim = "similar" if rng.random() < 0.9 else "dissimilar"
                recs.append(dict(pair_id=f"s{pair}", annotator_id=a, task="similarity", profile_id=prof,
                                 seed_query=seed, variant=variant, answer=sim, is_gold=False))
                if prof in ("emily", "noah"):
                    ans = name if rng.random() < 0.8 else rng.choice(["equally likely", "Anne"])
                elif prof == "child":
                    ans = "Child" if rng.random() < 0.8 else rng.choice(["equally likely", "Senior"])
                else:
                    ans = "yes" if rng.random() < 0.9 else "no"
                recs.append(dict(pair_id=f"l{pair}", annotator_id=a, task="alignment", profile_id=prof,
                                 seed_query=seed, variant=variant, answer=ans, is_gold=False))
    return recs


def main():
    rng = random.Random(SEED)
    TOY.mkdir(parents=True, exist_ok=True)
    (TOY / "runs").mkdir(exist_ok=True)
    (CORE_DATA / "profiles").mkdir(parents=True, exist_ok=True)

    with open(TOY / "topics.tsv", "w") as f:
        for tid, q in TOPICS:
            f.write(f"{tid}\t{q}\n")

    passages = build_passages(rng)
    with open(TOY / "passages.tsv", "w") as f:
        for pid, text, _, _ in passages:
            f.write(f"{pid}\t{text}\n")

    with open(TOY / "qrels.txt", "w") as f:
        for tid, _ in TOPICS:
            own = [p for p in passages if p[2] == tid]
            judged = rng.sample(own, round(HUMAN_JUDGED_FRACTION * len(own)))
            others = rng.sample([p for p in passages if p[2] != tid], 10)
            for p in sorted(judged + others, key=lambda p: p[0]):
                f.write(f"{tid} 0 {p[0]} {true_grade(p, tid)}\n")

    for system, strength, noise in [("fixture_a", 1.0, 0.8), ("fixture_b", 0.8, 1.2)]:
        lines = fixture_run(passages, system, strength, noise, rng)
        (TOY / "runs" / f"{system}.run").write_text("\n".join(lines) + "\n")

    with open(TOY / "annotations.jsonl", "w") as f:
        for r in annotations(rng):
            f.write(json.dumps(r) + "\n")

    for method, entries in PROFILES.items():
        data = [dict(profile_id=pid, method=method, name=name, description=desc) for pid, name, desc in entries]
        (CORE_DATA / "profiles" / f"{method}.json").write_text(json.dumps(data, indent=2) + "\n")

    vocab = set(COMMON_WORDS.split())
    for _, q in TOPICS:
        vocab.update(tokens(q))
    for _, text, _, _ in passages:
        vocab.update(tokens(text))
    for method in PROFILES.values():
        for _, name, desc in method:
            vocab.update(tokens(name + " " + desc))
    words = sorted(w for w in vocab if len(w) > 1 or w in ("a", "i"))
    header = "# Spell-check word list: everyday English plus the toy collection vocabulary.\n"
    (CORE_DATA / "dictionary.txt").write_text(header + "\n".join(words) + "\n")
    print(f"{len(passages)} passages, {len(words)} dictionary words")


if __name__ == "__main__":
    main()
