//! Closed-class word lists and rule tables used by the builtin chunker and by
//! tag normalisation. Everything here is immutable static data.

pub(crate) const DETERMINERS: &[&str] = &[
    "a", "an", "the", "this", "these", "those", "some", "any", "each", "every", "his", "her",
    "its", "their", "my", "your", "our", "another", "other", "others", "several", "many",
    "few", "various", "multiple", "numerous", "both", "all", "no", "much", "more", "most",
    "lots", "plenty", "such", "what",
];

pub(crate) const NUMERALS: &[&str] = &[
    "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven",
    "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen", "eighteen",
    "nineteen", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety",
    "hundred", "hundreds", "thousand", "thousands", "dozen", "dozens", "first", "second",
    "third", "fourth", "fifth", "single", "double", "triple", "half",
];

/// Nouns that only quantify the noun phrase that follows their "of".
pub(crate) const QUANTITY_NOUNS: &[&str] = &[
    "group", "groups", "bunch", "bunches", "couple", "pair", "pairs", "lot", "number",
    "herd", "herds", "flock", "flocks", "variety", "handful", "kind", "kinds", "type",
    "types", "sort", "sorts", "row", "rows", "pile", "piles", "stack", "stacks", "set",
    "sets", "bundle", "assortment", "collection", "crowd", "selection", "array", "bevy",
    "lineup", "line", "team", "piece", "pieces", "slice", "slices",
];

pub(crate) const COPULAS: &[&str] = &["is", "are", "was", "were", "be", "been", "being", "am"];

pub(crate) const AUXILIARIES: &[&str] = &[
    "do", "does", "did", "can", "could", "will", "would", "may", "might", "should", "must",
    "shall", "not", "n't", "seems", "seem", "appears", "appear", "become", "becomes",
];

pub(crate) const PRONOUNS: &[&str] = &[
    "he", "she", "it", "they", "we", "i", "you", "him", "them", "us", "me", "someone",
    "somebody", "something", "anyone", "anything", "everyone", "everything", "nobody",
    "nothing", "himself", "herself", "itself", "themselves", "one's",
];

pub(crate) const CONJUNCTIONS: &[&str] = &["and", "or", "but", "plus", "nor", "&"];

/// Words opening a subordinate or relative clause. The clause's subject
/// becomes the noun phrase just before the marker.
pub(crate) const CLAUSE_MARKERS: &[&str] = &[
    "who", "which", "that", "while", "where", "when", "as", "whilst", "whose", "because",
    "if", "so", "then",
];

pub(crate) const ADVERBS: &[&str] = &[
    "very", "too", "also", "just", "together", "there", "here", "nearby", "away", "out",
    "back", "really", "quite", "still", "almost", "even", "only", "well", "again",
    "outdoors", "indoors", "upside", "alone", "rather", "somewhat", "so", "yet", "now",
    "already", "soon", "ever", "never", "always", "often", "sometimes", "apart", "aside",
    "ahead", "overhead", "downhill", "uphill", "underwater", "upstairs", "downstairs",
    "today", "tonight", "once", "twice",
];

/// Multi-word prepositions, matched greedily before single words. Each entry
/// is the token sequence and the relation string it produces.
pub(crate) const MULTIWORD_PREPOSITIONS: &[&[&str]] = &[
    &["in", "the", "middle", "of"],
    &["on", "the", "side", "of"],
    &["in", "front", "of"],
    &["on", "top", "of"],
    &["in", "back", "of"],
    &["on", "the", "edge", "of"],
    &["at", "the", "end", "of"],
    &["next", "to"],
    &["close", "to"],
    &["out", "of"],
    &["away", "from"],
    &["across", "from"],
    &["in", "between"],
    &["inside", "of"],
    &["outside", "of"],
    &["on", "to"],
    &["up", "to"],
    &["along", "with"],
    &["together", "with"],
];

pub(crate) const PREPOSITIONS: &[&str] = &[
    "on", "in", "at", "with", "under", "near", "beside", "besides", "behind", "above",
    "over", "below", "by", "from", "into", "onto", "through", "across", "along", "against",
    "inside", "outside", "between", "toward", "towards", "atop", "beneath", "underneath",
    "during", "for", "to", "around", "among", "amongst", "past", "beyond", "within",
    "without", "upon", "like", "alongside", "after", "before", "throughout", "via", "about",
    "up", "down", "off", "amid", "opposite", "of",
];

/// Prepositions that link noun phrases without producing a relation.
pub(crate) const NON_RELATIONAL_PREPOSITIONS: &[&str] = &["of", "for", "like", "about"];

pub(crate) const ADJECTIVES: &[&str] = &[
    "red", "orange", "yellow", "green", "blue", "purple", "pink", "brown", "black", "white",
    "gray", "grey", "silver", "gold", "golden", "beige", "tan", "dark", "bright",
    "colorful", "colourful", "multicolored", "navy", "teal", "maroon", "turquoise", "blond",
    "blonde", "reddish", "pale", "violet", "crimson", "big", "small", "large", "little",
    "tiny", "huge", "giant", "tall", "short", "long", "wide", "narrow", "high", "low",
    "thick", "thin", "fat", "skinny", "round", "square", "flat", "curved", "straight",
    "oval", "rectangular", "circular", "enormous", "massive", "miniature", "mini", "steep",
    "deep", "shallow", "wooden", "plastic", "metallic", "ceramic", "woolen", "stainless",
    "striped", "plaid", "checkered", "spotted", "polka", "floral", "furry", "hairy",
    "fluffy", "leafy", "grassy", "rocky", "sandy", "snowy", "muddy", "dusty", "shiny",
    "glossy", "transparent", "clear", "old", "young", "new", "modern", "ancient", "antique",
    "vintage", "empty", "full", "open", "closed", "clean", "dirty", "wet", "dry", "hot",
    "cold", "warm", "cool", "fresh", "ripe", "raw", "frozen", "broken", "messy", "neat",
    "tidy", "crowded", "busy", "quiet", "calm", "lush", "dense", "rusty", "worn", "damaged",
    "sliced", "chopped", "cooked", "fried", "baked", "grilled", "roasted", "toasted",
    "melted", "stuffed", "parked", "lit", "unmade", "half-eaten", "beautiful", "pretty",
    "cute", "nice", "good", "great", "lovely", "ugly", "fancy", "plain", "different",
    "same", "happy", "sad", "angry", "sleepy", "hungry", "funny", "delicious", "tasty",
    "healthy", "elegant", "adorable", "strange", "unusual", "odd", "wild", "domestic",
    "friendly", "lonely", "elderly", "silly", "curly", "chilly", "fuzzy", "sunny", "cloudy",
    "rainy", "foggy", "stormy", "windy", "overcast", "blurry", "dim", "shady", "sleek",
    "professional", "electric", "digital", "tropical", "urban", "rural", "outdoor",
    "indoor", "public", "private", "local", "traditional", "typical", "casual", "formal",
    "heavy", "light", "soft", "hard", "smooth", "rough", "sharp", "loose", "tight", "naked",
    "bare", "shirtless", "topless", "homemade", "organic", "fake", "real", "toy",
    "favorite", "main", "only", "various", "asian", "african", "american", "italian",
    "mexican", "chinese", "japanese", "indian", "french", "british", "english",
    "vegetarian", "frosted", "powdered", "snow-covered", "tree-lined", "grass-covered",
    "commercial", "residential", "industrial", "rustic", "steamed", "scrambled", "assorted",
    "mixed", "decorated", "covered", "filled", "dressed", "tiled", "paved", "fenced",
    "framed", "abandoned", "attached",
];

/// Adjective suffixes, applied only to words longer than the paired length.
/// Adjectives that also name things; read as nouns after a noun ("traffic
/// light") or when a determiner leaves them without a head ("a toy").
pub(crate) const NOMINAL_ADJECTIVES: &[&str] = &[
    "light", "toy", "orange", "gold", "silver", "plastic", "chocolate",
];

pub(crate) const ADJECTIVE_SUFFIXES: &[(&str, usize)] =
    &[("ous", 5), ("ful", 5), ("less", 6), ("ical", 6), ("ish", 6)];

/// Words that end in an adjective suffix but are nouns.
pub(crate) const SUFFIX_NOUN_EXCEPTIONS: &[&str] = &[
    "handful", "mouthful", "spoonful", "cupful", "armful", "radish", "polish", "finish",
    "relish", "parish", "horseradish", "goldfish", "jellyfish", "starfish", "catfish",
    "swordfish", "blowfish", "house", "mouse", "blouse", "spouse", "octopus", "bus",
    "platypus", "asparagus", "hummus", "cactus", "citrus", "circus", "campus", "virus",
    "walrus", "abacus", "chorus", "crocus", "fungus", "lotus",
];

/// Adverbs ending in "-ly" are recognised by suffix; these nouns and
/// adjectives end in "-ly" too.
pub(crate) const LY_EXCEPTIONS: &[&str] = &[
    "family", "belly", "jelly", "lily", "bully", "rally", "fly", "butterfly", "dragonfly",
    "firefly", "holly", "ally", "assembly", "supply", "reply", "jolly", "chilly", "silly",
    "lovely", "friendly", "curly", "ugly", "early", "daily", "elderly", "lonely", "italy",
    "sally", "molly", "polly", "trolley", "gully", "doily", "smelly", "woolly", "wobbly",
    "bubbly", "cuddly", "frilly", "hilly", "burly", "comely", "costly", "deadly", "likely",
    "lively", "lowly", "oily", "only", "orderly", "surly", "timely", "ghastly", "prickly",
    "scaly", "sparkly", "squiggly", "wrinkly", "potbelly",
];

/// "-ing" words that are always nouns.
pub(crate) const NOMINAL_ING: &[&str] = &[
    "building", "ceiling", "clothing", "morning", "evening", "wedding", "pudding", "icing",
    "frosting", "railing", "awning", "stuffing", "topping", "earring", "duckling",
    "dumpling", "sibling", "lightning", "thing", "king", "ring", "wing", "string", "spring",
    "sing", "sling", "bring", "something", "nothing", "anything", "everything", "during",
    "ping", "herring", "darling", "seedling", "sapling", "shilling", "viking", "bedding",
    "siding", "flooring", "lettering", "housing", "setting", "landing", "offspring",
];

/// "-ing" words that form compounds ("dining table", "parking lot") when
/// they open a noun phrase and a noun follows.
pub(crate) const COMPOUND_ING: &[&str] = &[
    "dining", "living", "parking", "shopping", "cutting", "swimming", "baking", "washing",
    "waiting", "frying", "sewing", "fishing", "sleeping", "ironing", "boarding", "walking",
    "running", "hiking", "diving", "skating", "surfing", "skiing", "riding", "racing",
    "training", "cooking", "serving", "changing", "dressing", "drinking", "mixing",
    "rolling", "writing", "reading", "vending", "ticking", "crossing", "bowling", "camping",
    "climbing", "driving", "passing",
];

/// Irregular verb forms mapped to their base form.
pub(crate) const IRREGULAR_VERBS: &[(&str, &str)] = &[
    ("sat", "sit"), ("stood", "stand"), ("rode", "ride"), ("ridden", "ride"), ("ate", "eat"),
    ("eaten", "eat"), ("ran", "run"), ("flew", "fly"), ("flown", "fly"), ("held", "hold"),
    ("threw", "throw"), ("thrown", "throw"), ("wore", "wear"), ("worn", "wear"),
    ("caught", "catch"), ("took", "take"), ("taken", "take"), ("made", "make"),
    ("drove", "drive"), ("driven", "drive"), ("hung", "hang"), ("swung", "swing"),
    ("sang", "sing"), ("drank", "drink"), ("swam", "swim"), ("lay", "lie"), ("lain", "lie"),
    ("lying", "lie"), ("lies", "lie"), ("laid", "lay"), ("dying", "die"), ("tying", "tie"),
    ("fed", "feed"), ("led", "lead"), ("bit", "bite"), ("bitten", "bite"), ("hit", "hit"),
    ("cut", "cut"), ("put", "put"), ("set", "set"), ("kept", "keep"), ("slept", "sleep"),
    ("sold", "sell"), ("told", "tell"), ("found", "find"), ("brought", "bring"),
    ("bought", "buy"), ("built", "build"), ("fell", "fall"), ("fallen", "fall"),
    ("grew", "grow"), ("grown", "grow"), ("saw", "see"), ("seen", "see"), ("gave", "give"),
    ("given", "give"), ("went", "go"), ("gone", "go"), ("came", "come"), ("has", "have"),
    ("had", "have"), ("having", "have"), ("using", "use"), ("leaves", "leave"),
    ("shot", "shoot"), ("stuck", "stick"), ("spun", "spin"),
    ("blew", "blow"), ("blown", "blow"), ("dug", "dig"), ("won", "win"), ("left", "leave"),
];

/// Base forms of content verbs common in image captions.
pub(crate) const VERBS: &[&str] = &[
    "sit", "stand", "hold", "ride", "eat", "walk", "run", "fly", "play", "lay", "lie",
    "look", "watch", "carry", "wear", "throw", "catch", "hit", "swing", "drink", "cut",
    "talk", "read", "use", "sleep", "swim", "surf", "ski", "skate", "park", "cross", "wait",
    "fill", "cover", "pull", "push", "feed", "graze", "drive", "hang", "lean", "jump",
    "kick", "pose", "smile", "show", "sell", "prepare", "contain", "make", "take", "have",
    "chase", "bite", "lick", "sniff", "climb", "fall", "float", "sail", "paddle", "row",
    "pick", "reach", "point", "wave", "hug", "kiss", "touch", "pet", "brush", "wash",
    "cook", "bake", "serve", "share", "pour", "stir", "slice", "grill", "decorate", "top",
    "display", "line", "surround", "overlook", "face", "stare", "gaze", "rest", "relax",
    "lounge", "perch", "nap", "roam", "wander", "stroll", "hike", "travel", "head",
    "approach", "leave", "enter", "exit", "pass", "go", "come", "drop", "toss", "pitch",
    "bat", "block", "tackle", "dribble", "shoot", "aim", "fish", "dig", "plant", "grow",
    "build", "fix", "repair", "paint", "draw", "write", "type", "text", "call", "listen",
    "sing", "dance", "perform", "practice", "compete", "race", "win", "spin", "roll",
    "bounce", "dive", "splash", "stretch", "bend", "kneel", "squat", "crouch", "lift",
    "drag", "tow", "load", "unload", "deliver", "board", "land", "hover", "glide", "soak",
    "shower", "bathe", "dry", "comb", "shave", "dress", "tie", "button", "zip", "open",
    "close", "lock", "snowboard", "skateboard", "kite", "camp", "shop", "buy", "browse",
    "order", "cheer", "clap", "laugh", "cry", "yell", "shout", "scream", "sip", "chew",
    "nibble", "munch", "devour", "taste", "smell", "hear", "see", "examine", "inspect",
    "check", "guide", "lead", "follow", "herd", "groom", "attach", "stack", "arrange",
    "place", "set", "keep", "empty", "spill", "reflect", "stick", "peek", "hide", "shelter",
    "protect", "frame", "border", "stop", "crash", "collide", "speed", "zoom", "cruise",
    "steer", "swat", "grab", "clutch", "cradle", "snuggle", "cuddle", "nuzzle", "curl",
    "sprawl", "give", "receive", "get", "put", "bring", "send", "meet", "greet", "visit",
];

/// Nouns whose plural ends in "-ies" but whose singular ends in "-ie".
pub(crate) const IE_NOUNS: &[&str] = &[
    "cookie", "movie", "pie", "tie", "brownie", "smoothie", "hoodie", "selfie", "zombie",
    "goalie", "rookie", "calorie", "veggie", "beanie", "prairie", "genie", "collie",
    "birdie", "lingerie", "sortie", "pixie", "magpie", "necktie", "bowtie", "auntie",
    "eerie", "budgie", "boogie", "hippie", "yuppie", "bootie", "groupie", "aussie",
    "lie", "die",
];

/// Nouns in "-o" that pluralise with "-oes".
pub(crate) const OES_NOUNS: &[&str] = &[
    "tomato", "potato", "hero", "mango", "volcano", "echo", "domino", "torpedo", "veto",
    "buffalo", "mosquito", "tornado",
];

/// Irregular plurals.
pub(crate) const IRREGULAR_PLURALS: &[(&str, &str)] = &[
    ("men", "man"), ("women", "woman"), ("children", "child"), ("feet", "foot"),
    ("teeth", "tooth"), ("geese", "goose"), ("mice", "mouse"), ("oxen", "ox"),
    ("knives", "knife"), ("leaves", "leaf"), ("loaves", "loaf"), ("shelves", "shelf"),
    ("wolves", "wolf"), ("halves", "half"), ("calves", "calf"), ("scarves", "scarf"),
    ("lives", "life"), ("wives", "wife"), ("thieves", "thief"), ("elves", "elf"),
    ("buses", "bus"), ("cacti", "cactus"), ("fungi", "fungus"), ("dice", "die"),
    ("policemen", "policeman"), ("firemen", "fireman"), ("fishermen", "fisherman"),
    ("businessmen", "businessman"), ("sportsmen", "sportsman"), ("gentlemen", "gentleman"),
    ("horsemen", "horseman"), ("snowmen", "snowman"), ("persons", "person"),
    ("species", "species"), ("series", "series"), ("indices", "index"),
];

/// Words that look plural but are not reduced.
/// Plural nouns without a plural suffix.
pub(crate) const UNMARKED_PLURALS: &[&str] = &["people", "police", "cattle", "livestock", "folks", "crowd"];

pub(crate) const INVARIANT_NOUNS: &[&str] = &[
    "clothes", "pants", "jeans", "shorts", "scissors", "sunglasses", "glasses", "goggles",
    "binoculars", "tennis", "news", "species", "series", "headphones", "earphones", "tongs",
    "pliers", "trousers", "leggings", "pajamas", "overalls", "sweatpants", "tights",
    "briefs", "boxers", "christmas", "canvas", "atlas", "chess", "lens", "gas", "bus",
    "physics", "athletics", "gymnastics", "mathematics", "electronics", "politics",
    "ethics", "economics", "billiards", "darts", "yes", "his", "this", "is", "was", "has",
    "does", "always", "perhaps", "plus", "thus", "various", "numerous", "us", "its", "moss",
    "bass", "grass", "glass", "class", "dress", "cross", "brass", "chassis", "lotus",
    "iris", "pelvis", "oasis", "axis", "hummus", "couscous", "analysis", "texas", "paris",
    "vegas", "kansas", "dallas", "ios", "mess", "chaos", "bias", "alias", "bonus", "campus",
    "census", "cactus", "corpus", "genius", "octopus", "walrus", "circus", "citrus",
    "hippopotamus", "asparagus", "rhinoceros", "mattress", "cutlass", "harness", "fortress",
    "princess", "waitress", "actress", "compass", "surplus",
];
