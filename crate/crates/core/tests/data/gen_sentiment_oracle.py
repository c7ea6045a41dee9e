"""Regenerate sentiment_oracle.tsv from the reference vaderSentiment analyzer.

    pip install vaderSentiment==3.3.2
    python3 gen_sentiment_oracle.py > sentiment_oracle.tsv

Compound and mass scores are written unrounded.
"""
import random
import vaderSentiment.vaderSentiment as vs

vs.round = lambda x, n=None: x  # keep full precision in the output
analyzer = vs.SentimentIntensityAnalyzer()

FIXED = [
    "",
    "The policy is good.",
    "The policy is very good.",
    "The policy is VERY GOOD, and the fare is fair.",
    "The policy is not good.",
    "The policy is not bad at all.",
    "The fare increase is bad, but the service improvement is great.",
    "Residents will never be happy with a higher sales tax!",
    "Residents have never been this happy with transit!!!",
    "At least it isn't a horrible outcome.",
    "The plan is only kind of helpful.",
    "The plan is sort of useless.",
    "Without a doubt, an excellent idea.",
    "This is the least harmful option for low-income households.",
    "No problem with moderate driver fees.",
    "There is no good option or fair option here.",
    "Congestion is terrible and commuters are frustrated?",
    "Is this fair?? Is this affordable???",
    "Wait at the bus stop for twenty minutes.",
    "Lower fares are beneficial for encouraging public transit use.",
    "A moderate sales tax is acceptable if it significantly improves transit services.",
    "The Loop has excellent accessibility to resources and services.",
    "However, the cost of living is also high, which can impact discretionary spending.",
    "Car ownership is less common due to the availability of public transit and the high cost of parking.",
    "Policies that enhance transit services without significantly increasing costs are preferred.",
    "Higher fees would burden vulnerable families and hurt local businesses.",
    "Many households struggle with poverty, unemployment, and limited access to jobs.",
    "The community would benefit from safer, more reliable, and cheaper buses.",
    "Raising the driver fee could reduce congestion and emissions, improving air quality.",
    "Residents strongly oppose any policy that increases the burden on low-income workers.",
    "I love this proposal :) but the tax is a little too high :(",
    "Transit riders deserve better 😁 service",
    "Commuters are FURIOUS about delays!",
    "The outcome is kinda ok, lol",
    "Crime and violence concerns limit evening transit ridership.",
    "Affordable, efficient, and convenient transit is essential for the community.",
    "Not a great deal for drivers, but a wonderful win for riders.",
    "The policy hardly helps anyone.",
    "The policy barely hurts anyone.",
    "It is absolutely the worst plan for the neighborhood.",
    "It is an incredibly smart and fair plan!",
    "Nobody is happy and nothing is fair.",
    "They didn't like the fare, they didn't like the fee.",
    "The proposal isn't terrible, but it isn't great either.",
    "Transit access is crucial for healthcare, education, and employment opportunities.",
    "Discretionary consumption is limited, so affordability is the main priority.",
    "Lower-income residents rely heavily on buses and would suffer from fare hikes.",
    "A strong transit network supports economic growth and opportunity.",
    "This neighborhood faces significant economic challenges and disinvestment.",
    "The wealthy residents can easily absorb modest increases in taxes.",
]

SUBJECTS = ["The policy", "This proposal", "The fare change", "The driver fee", "The sales tax",
            "Transit service", "The bus network", "The referendum", "Our community", "Commuting"]
VERBS = ["is", "seems", "feels", "looks", "was", "will be"]
BOOSTERS = ["", "very ", "extremely ", "slightly ", "somewhat ", "really ", "hardly ", "so ", "kind of ", "totally "]
NEGS = ["", "not ", "never ", "", "", "n't "]
ADJS = ["good", "bad", "great", "terrible", "fair", "unfair", "helpful", "harmful", "affordable",
        "expensive", "reliable", "useless", "excellent", "awful", "beneficial", "burdensome",
        "safe", "dangerous", "convenient", "frustrating", "hopeful", "painful", "nice", "poor"]
TAILS = ["", ".", "!", "!!", "!!!!!", "?", "??", "????", "."]
CONJ = [" but ", " and ", " although ", " yet ", " but "]

rng = random.Random(20240531)


def clause():
    subj = rng.choice(SUBJECTS)
    verb = rng.choice(VERBS)
    neg = rng.choice(NEGS)
    if neg == "n't ":
        verb = {"is": "isn't", "was": "wasn't", "will be": "won't be"}.get(verb, "doesn't " + verb)
        neg = ""
    adj = rng.choice(ADJS)
    boost = rng.choice(BOOSTERS)
    if rng.random() < 0.15:
        adj = adj.upper()
    if rng.random() < 0.08:
        boost = boost.upper()
    return f"{subj} {verb} {neg}{boost}{adj}"


sentences = list(FIXED)
while len(sentences) < 200:
    s = clause()
    if rng.random() < 0.45:
        c = clause()
        s += rng.choice(CONJ) + c[0].lower() + c[1:]
    s += rng.choice(TAILS)
    if s not in sentences:
        sentences.append(s)

print("text\tcompound\tpos\tneg\tneu")
for s in sentences:
    r = analyzer.polarity_scores(s)
    print(f"{s}\t{r['compound']!r}\t{r['pos']!r}\t{r['neg']!r}\t{r['neu']!r}")
