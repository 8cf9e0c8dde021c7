"""Regenerate the bundled toy fixtures under src/toxprune/data/.

The output is committed; rerunning this script must reproduce it exactly.

    python scripts/make_toy_data.py
"""

import json
import random
from pathlib import Path

from toxprune.tokenizer import BOS, EOS, UNK, Vocabulary, learn_merges, save_vocab

DATA = Path(__file__).resolve().parents[1] / "src" / "toxprune" / "data"
NUM_MERGES = 300
LIST_WEIGHT = 20

TOXIC_WORDS = """
fuck fucking fucker motherfucker shit shitty bullshit damn goddamn bitch
bitches bastard asshole dumbass jackass crap piss pissed dick dickhead
cock cunt twat prick wanker bollocks bugger douche douchebag slut
whore skank tits boobs porn horny jerkoff scumbag dipshit arse
""".split()

# 40 prompt / reference pairs
DIALOGUE = [
    ("hi , how are you doing today ?", "i am doing well , thanks . i just got back from a walk with my dog ."),
    ("what do you do for a living ?", "i work as a nurse at the local hospital , it keeps me busy ."),
    ("do you have any pets ?", "yes , i have two cats and a small dog that loves to play ."),
    ("what is your favorite food ?", "i really love pizza , especially with extra cheese and mushrooms ."),
    ("where do you live ?", "i live in a small town near the lake with my family ."),
    ("what do you like to do on weekends ?", "on weekends i like to go hiking and read a good book ."),
    ("do you like music ?", "i love music , i play the guitar and sing in a band ."),
    ("what kind of books do you read ?", "mostly mystery novels , but i also enjoy history books ."),
    ("do you have any siblings ?", "i have an older brother and a younger sister ."),
    ("what is your favorite color ?", "my favorite color is blue , like the ocean ."),
    ("have you traveled anywhere fun lately ?", "last summer i went to the beach with my friends and it was great ."),
    ("what did you eat for dinner ?", "i made some pasta with tomato sauce and a fresh salad ."),
    ("do you play any sports ?", "i play soccer with my friends every sunday morning ."),
    ("what are you studying in school ?", "i am studying biology because i want to be a doctor ."),
    ("do you like to cook ?", "yes , cooking is one of my favorite things to do at home ."),
    ("what is your dream job ?", "my dream job would be to work as a chef in a big city ."),
    ("how was your day ?", "my day was pretty good , i finished all my work early ."),
    ("do you watch any tv shows ?", "i watch a lot of cooking shows and some old movies ."),
    ("what is your favorite season ?", "i love the fall because the leaves change color ."),
    ("do you have any hobbies ?", "i like painting and working in my garden ."),
    ("what music do you listen to ?", "i listen to a lot of rock and some country music ."),
    ("are you married ?", "no , but i have a boyfriend and we have been together for three years ."),
    ("do you like to travel ?", "i love to travel , i want to visit japan next year ."),
    ("what time do you wake up ?", "i usually wake up at six in the morning to go for a run ."),
    ("what is your favorite animal ?", "i think dogs are the best , they are so loyal ."),
    ("do you drink coffee ?", "yes , i need a cup of coffee every morning to start my day ."),
    ("what did you do yesterday ?", "yesterday i cleaned my house and then went to the movies ."),
    ("do you like your job ?", "i like my job a lot , my coworkers are very kind ."),
    ("what are your plans for tonight ?", "i am going to have dinner with my parents tonight ."),
    ("can you tell me about your family ?", "my family is big , i have four brothers and a lot of cousins ."),
    ("what is your favorite movie ?", "my favorite movie is an old western that my dad loves too ."),
    ("do you like the outdoors ?", "yes , i love camping and fishing by the river ."),
    ("what do you do to relax ?", "to relax i take a warm bath and listen to music ."),
    ("where did you grow up ?", "i grew up on a farm with horses and cows ."),
    ("do you speak any other languages ?", "i speak a little spanish and i am learning french ."),
    ("what is the best part of your week ?", "the best part of my week is friday night with my friends ."),
    ("are you a morning person ?", "not really , i am more of a night owl ."),
    ("what is your favorite holiday ?", "i love the holidays because my whole family comes home ."),
    ("do you like to dance ?", "i love to dance , i take salsa classes on tuesday ."),
    ("what makes you happy ?", "spending time with my family and my dog makes me happy ."),
]

SUBJECTS = ["i", "we", "my friend", "my sister", "my brother", "my dog", "my mom", "my dad", "they", "you"]
VERBS = ["love", "like", "want", "need", "hate", "enjoy", "miss", "see", "make", "have"]
OBJECTS = ["pizza", "music", "the beach", "my job", "the movies", "coffee", "my cats", "the garden",
           "a good book", "the weekend", "soccer", "the lake", "dinner", "my family", "the city"]
TAILS = ["every day", "a lot", "so much", "right now", "at home", "on sunday", "with my friends", "too", ""]


def clean_sentence(rng):
    tail = rng.choice(TAILS)
    parts = [rng.choice(SUBJECTS), rng.choice(VERBS), rng.choice(OBJECTS)] + ([tail] if tail else [])
    return " ".join(parts) + " ."


def pollute(sentence, rng):
    """Insert profanity the way an unfiltered chat model would."""
    words = sentence.split()
    for _ in range(rng.choice([1, 1, 2, 3])):
        words.insert(rng.randrange(len(words) + 1), rng.choice(TOXIC_WORDS))
    return " ".join(words)


def build_corpus(seed=0, clean=600, polluted=300):
    rng = random.Random(seed)
    lines = []
    for prompt, response in DIALOGUE:
        lines.append(f"{prompt} {response}")
    for _ in range(clean):
        lines.append(clean_sentence(rng))
    for _ in range(polluted):
        base = clean_sentence(rng) if rng.random() < 0.7 else rng.choice(DIALOGUE)[1]
        lines.append(pollute(base, rng))
    for prompt, response in DIALOGUE:
        lines.append(f"{prompt} {pollute(response, rng)}")
    return lines


def build_vocab(corpus_lines):
    # 126 single-byte code points: printable ASCII without space, plus U+00E0..U+00FF
    chars = [chr(c) for c in range(33, 127)] + [chr(c) for c in range(0xE0, 0x100)]
    tokens = [BOS, EOS, UNK, "<pad>"] + chars + [c + "</w>" for c in chars]
    # The word list (both casings) is up-weighted in the merge statistics so
    # that, as in a large production vocabulary, listed words end up as one or
    # two tokens instead of single characters.
    listed = " ".join(TOXIC_WORDS + [w.capitalize() for w in TOXIC_WORDS])
    merges = learn_merges(corpus_lines + [listed] * LIST_WEIGHT, NUM_MERGES)
    for a, b in merges:
        if a + b not in tokens:
            tokens.append(a + b)
    return Vocabulary(tuple(tokens), tuple(merges))


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    corpus = build_corpus()
    (DATA / "corpus.txt").write_text("\n".join(corpus) + "\n", encoding="utf-8")
    (DATA / "prompts.txt").write_text("\n".join(p for p, _ in DIALOGUE) + "\n", encoding="utf-8")
    (DATA / "references.jsonl").write_text(
        "".join(json.dumps({"references": [r]}) + "\n" for _, r in DIALOGUE), encoding="utf-8"
    )
    (DATA / "toxic_words.txt").write_text(
        "# toy profanity list, one word per line\n" + "\n".join(TOXIC_WORDS) + "\n", encoding="utf-8"
    )
    vocab = build_vocab(corpus)
    save_vocab(vocab, DATA / "vocab.json", DATA / "merges.txt")
    print(f"{len(corpus)} corpus lines, {len(vocab)} tokens, {len(vocab.merges)} merges")


if __name__ == "__main__":
    main()
