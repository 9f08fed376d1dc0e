"""Shared builders: random advertisements, seeded corpora, the golden fixture."""
import random
import string

from hypothesis import strategies as st

from r2p2p.advert import DESCRIPTOR_CODES, LEVEL_CODES, DocumentAdvertisement, RatingElement
from r2p2p.relevance import UserProfile
from r2p2p.store import CredentialRegistry, Store

# Characters that make serialization earn its keep.
AWKWARD = "<>&\"' \t\n\r]]>é日本\U0001f600"

xml_text = st.text(
    alphabet=st.one_of(
        st.characters(blacklist_categories=("Cs", "Cc", "Cn")),
        st.sampled_from("\t\n\r<>&"),
    ),
    max_size=40,
)
identifiers = st.from_regex(r"[A-Za-z0-9:._@-]{1,24}", fullmatch=True).filter(lambda s: s not in (".", ".."))
ratings = st.builds(
    RatingElement,
    citations=st.integers(min_value=0, max_value=10**12),
    level=st.sampled_from(LEVEL_CODES),
    descriptor=st.sampled_from(DESCRIPTOR_CODES),
)
advertisements = st.builds(
    DocumentAdvertisement,
    id=identifiers.map(lambda s: "urn:r2p2p:" + s),
    title=xml_text.filter(bool),
    summary=xml_text,
    author_id=identifiers,
    content_hash=st.from_regex(r"[0-9a-f]{8,64}", fullmatch=True),
    rating=st.none() | ratings,
    revision=st.integers(min_value=1, max_value=10**6),
)
profiles = st.builds(
    UserProfile,
    level=st.sampled_from(LEVEL_CODES),
    desired_descriptor=st.none() | st.sampled_from(DESCRIPTOR_CODES),
)


def random_text(rng, min_size=0, max_size=30):
    pool = string.ascii_letters + string.digits + AWKWARD
    return "".join(rng.choice(pool) for _ in range(rng.randint(min_size, max_size)))


def random_rating(rng):
    return RatingElement(
        rng.choice([0, 1, 5, 10, 50, rng.randint(0, 10**9)]),
        rng.choice(LEVEL_CODES),
        rng.choice(DESCRIPTOR_CODES),
    )


def random_advertisement(rng, adv_id=None, rated_probability=0.8):
    return DocumentAdvertisement(
        id=adv_id or "urn:r2p2p:doc-%d" % rng.randint(0, 10**9),
        title=random_text(rng, 1),
        summary=random_text(rng),
        author_id=rng.choice(["alice", "bob", "carol", "dave"]),
        content_hash="%064x" % rng.getrandbits(256),
        rating=random_rating(rng) if rng.random() < rated_probability else None,
        revision=rng.randint(1, 9),
    )


def random_profile(rng):
    return UserProfile(rng.choice(LEVEL_CODES), rng.choice([None, *DESCRIPTOR_CODES]))


def random_result_set(rng, max_size=7):
    """Distinct-id advertisements with deliberately colliding rating values."""
    size = rng.randint(0, max_size)
    ids = rng.sample(range(100), size)
    out = []
    for n in ids:
        rating = None
        if rng.random() < 0.8:
            rating = RatingElement(rng.choice([0, 3, 10, 50]), rng.choice(LEVEL_CODES), rng.choice(DESCRIPTOR_CODES))
        out.append(
            DocumentAdvertisement(
                id="urn:r2p2p:doc-%02d" % n,
                title="doc %d" % n,
                summary="",
                author_id="alice",
                content_hash="00",
                rating=rating,
            )
        )
    return out


def sequential_ids(prefix):
    counter = iter(range(1, 10**9))
    return lambda: "urn:r2p2p:%s-%04d" % (prefix, next(counter))


def make_registry():
    registry = CredentialRegistry()
    creds = {
        "alice": registry.add("alice", "author", "alice-secret"),
        "bob": registry.add("bob", "author", "bob-secret"),
        "rita": registry.add("rita", "rater", "rita-secret"),
        "rex": registry.add("rex", "reader", "rex-secret"),
    }
    return registry, creds


# -- simulated network corpus -------------------------------------------------

VOCABULARY = ["image", "processing", "network", "peer", "rating", "xml", "search", "vision"]


def build_sim_corpus(seed, peers=10, documents=100):
    """Seeded stores for *peers* nodes holding *documents* advertisements in total."""
    rng = random.Random(seed)
    registry, creds = make_registry()
    stores = {}
    for i in range(peers):
        peer_id = "peer-%02d" % i
        stores[peer_id] = Store(registry, id_factory=sequential_ids(peer_id))
    peer_ids = sorted(stores)
    for n in range(documents):
        store = stores[peer_ids[n % peers]]
        words = rng.sample(VOCABULARY, 3)
        rating = random_rating(rng) if rng.random() < 0.85 else None
        store.publish_document(
            " ".join(words).title(),
            "about %s" % rng.choice(VOCABULARY),
            ("body %d" % n).encode(),
            rating,
            creds[rng.choice(["alice", "bob", "rita"])],
        )
    return stores, creds


# -- golden end-to-end fixture ---------------------------------------------------

GOLDEN_PEERS = ("peer-a", "peer-b", "peer-c")
GOLDEN_CITATIONS = [12, 40, 7, 40, 3, 25, 18, 40, 9, 0, 31, 40]
GOLDEN_KIND = {"E": "Basics of Image Processing", "F": "Image Processing Tutorial", "G": "Image Processing Research Paper"}
GOLDEN_AUDIENCE = {"A": "B-Tech", "B": "M-Tech", "C": "PhD", "D": "Faculty"}


def build_golden_stores():
    """Three peers, twelve documents: one per level/descriptor combination.

    doc-01 is also held by peer-b at revision 1 while peer-a has revised it
    to revision 2, so searches must deduplicate.
    """
    registry, creds = make_registry()
    combos = [(lvl, desc) for lvl in LEVEL_CODES for desc in DESCRIPTOR_CODES]
    plan = {peer: [] for peer in GOLDEN_PEERS}
    for n, (lvl, desc) in enumerate(combos, 1):
        plan[GOLDEN_PEERS[(n - 1) % 3]].append((n, lvl, desc))
    plan["peer-b"].insert(0, (1, "A", "E"))

    stores = {}
    for peer, docs in plan.items():
        ids = iter("urn:r2p2p:doc-%02d" % n for n, _, _ in docs)
        store = Store(registry, id_factory=lambda ids=ids: next(ids))
        for n, lvl, desc in docs:
            store.publish_document(
                "%s for %s (%02d)" % (GOLDEN_KIND[desc], GOLDEN_AUDIENCE[lvl], n),
                "level %s document number %d" % (lvl, n),
                ("golden document %d" % n).encode(),
                RatingElement(GOLDEN_CITATIONS[n - 1], lvl, desc),
                creds["alice"],
            )
        stores[peer] = store
    # peer-a revises doc-01 citations; peer-b keeps the stale copy
    stores["peer-a"].revise_rating("urn:r2p2p:doc-01", RatingElement(55, "A", "E"), creds["rita"])
    return stores, creds


GOLDEN_QUERY = ["image", "processing"]
GOLDEN_PROFILE = UserProfile("C", "G")
