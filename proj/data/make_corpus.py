"""Regenerates corpus.jsonl, the bundled synthetic domain corpus.

Documents describe a fictional estuary and its regulation so no real-world
facts are implied. Each document carries the publisher header, navigation
trail and share footer that clean_rules.toml removes.
"""
import json
import random

rng = random.Random(20240611)

SITES = ["Verdant Bay", "the Olm estuary", "Harrow Flats", "Cinder Creek", "the Pell marshes", "Saltmere Inlet"]
SPECIES = ["silver smelt", "banded eelgrass", "ribbed mussel", "sand lance", "tern colony", "kelp bass"]
AGENCIES = ["the Estuary Board", "the Coastal Permit Office", "the Fisheries Council", "the Water Quality Unit"]
POLLUTANTS = ["nitrate", "phosphate", "fine sediment", "copper", "thermal discharge", "road salt"]
SEASONS = ["spring", "summer", "autumn", "winter"]

TOPICS = [
    ("Discharge permits", [
        "A discharge permit issued by {agency} lapses after {n} months unless the holder files a renewal.",
        "Permit holders must report {pollutant} concentrations to {agency} every {m} weeks.",
        "When {pollutant} exceeds {x} milligrams per litre at {site}, the permit is suspended pending review.",
        "A suspended permit can be reinstated only after two consecutive compliant samples.",
        "Facilities upstream of {site} receive stricter limits because dilution there is lower.",
        "{agency} may grant a variance if the operator installs a settling basin within {n} months.",
    ]),
    ("Fisheries management", [
        "The {species} season at {site} opens in {season} and closes when the catch quota is reached.",
        "{agency} sets the quota each year from a survey of juvenile {species}.",
        "A closure is declared when survey counts fall below {x} percent of the ten-year mean.",
        "Nets with a mesh smaller than {m} centimetres are prohibited near {site}.",
        "Bycatch of {species} must be released and recorded in the vessel log.",
        "Repeated logbook errors lead to a warning and then a suspension of the fishing licence.",
    ]),
    ("Water quality monitoring", [
        "Monitoring buoys at {site} record dissolved oxygen every {m} minutes.",
        "Low oxygen in {season} usually follows a bloom fed by {pollutant} runoff.",
        "A hypoxia alert is issued when dissolved oxygen stays below {m} milligrams per litre for six hours.",
        "During an alert, {agency} pauses dredging and asks farms to delay fertilising.",
        "Sediment cores show that {pollutant} accumulates fastest in slow channels near {site}.",
        "Samples are split so that one half can be retested if a result is disputed.",
    ]),
    ("Habitat restoration", [
        "Restoration of {species} beds at {site} began after a storm removed most of the cover.",
        "Transplanted shoots survive best when planted in {season} at depths under {m} metres.",
        "Each restored plot is compared with an untouched control plot for {n} months.",
        "Grazing by crabs explains most losses in the first year of a restoration.",
        "{agency} funds restoration only where {pollutant} levels are already below the target.",
        "A plot counts as recovered when shoot density reaches {x} percent of the reference site.",
    ]),
    ("Flood and storm rules", [
        "Construction within {m} metres of the high-water line at {site} requires a flood assessment.",
        "The assessment must consider a storm surge with a return period of {n} years.",
        "{agency} rejects plans that move floodwater onto a neighbouring property.",
        "After a major storm, debris from damaged jetties is removed before the {species} spawning period.",
        "Emergency works may start without a permit but must be reported within {m} days.",
        "Temporary barriers are removed once the river gauge falls below the warning level.",
    ]),
]


def fill(t):
    return t.format(
        site=rng.choice(SITES), species=rng.choice(SPECIES), agency=rng.choice(AGENCIES),
        pollutant=rng.choice(POLLUTANTS), season=rng.choice(SEASONS),
        n=rng.choice([6, 12, 18, 24, 36]), m=rng.choice([2, 3, 4, 5, 8, 10]), x=rng.choice([15, 20, 40, 60, 75]),
    )


def cap(s):
    return s[0].upper() + s[1:]


docs = []
for i in range(25):
    title, templates = TOPICS[i % len(TOPICS)]
    paras = []
    for _ in range(rng.randint(3, 4)):
        sents = [cap(fill(rng.choice(templates))) for _ in range(rng.randint(3, 5))]
        paras.append(" ".join(sents))
    header = f"Published: 2024-{1 + i % 12:02d}-{1 + (i * 7) % 28:02d} 08:{i % 60:02d} | Estuary Review Desk"
    nav = f"Home > Regulation > {title}"
    footer = "Share this article | Subscribe to updates"
    text = "\n".join([header, nav, ""] + ["\n\n".join(paras)] + ["", footer])
    docs.append({"doc_id": f"doc{i + 1:02d}", "text": text, "source_meta": {"topic": title, "synthetic": True}})

with open("corpus.jsonl", "w", encoding="utf-8") as f:
    for d in docs:
        f.write(json.dumps(d, sort_keys=True, ensure_ascii=False) + "\n")
