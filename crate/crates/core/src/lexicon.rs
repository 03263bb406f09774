//! Closed-class word lists shared by the tagger, the mention detector and
//! the content-word filters. All entries are lowercase.

pub(crate) const WH_WORDS: &[&str] = &["what", "when", "where", "which", "who", "whom", "whose", "why", "how"];

pub(crate) const PRONOUNS: &[&str] = &[
    "i",
    "me",
    "my",
    "mine",
    "myself",
    "you",
    "your",
    "yours",
    "yourself",
    "yourselves",
    "he",
    "him",
    "his",
    "himself",
    "she",
    "her",
    "hers",
    "herself",
    "it",
    "its",
    "itself",
    "we",
    "us",
    "our",
    "ours",
    "ourselves",
    "they",
    "them",
    "their",
    "theirs",
    "themselves",
    "this",
    "that",
    "these",
    "those",
];

pub(crate) const NUMBER_WORDS: &[&str] = &[
    "zero",
    "one",
    "two",
    "three",
    "four",
    "five",
    "six",
    "seven",
    "eight",
    "nine",
    "ten",
    "eleven",
    "twelve",
    "thirteen",
    "fourteen",
    "fifteen",
    "sixteen",
    "seventeen",
    "eighteen",
    "nineteen",
    "twenty",
    "thirty",
    "forty",
    "fifty",
    "sixty",
    "seventy",
    "eighty",
    "ninety",
    "hundred",
    "thousand",
    "million",
    "billion",
    "trillion",
    "dozen",
];

pub(crate) const MONTHS: &[&str] = &[
    "january",
    "february",
    "march",
    "april",
    "may",
    "june",
    "july",
    "august",
    "september",
    "october",
    "november",
    "december",
];

/// Words after which a period does not end a sentence.
pub(crate) const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "mt", "ft", "vs", "etc", "inc", "ltd", "co", "corp", "dept",
    "univ", "gen", "col", "lt", "sgt", "capt", "cmdr", "adm", "gov", "sen", "rep", "rev", "pres", "hon", "no", "nos",
    "vol", "fig", "pp", "approx", "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec",
    "e.g", "i.e", "u.s", "u.k", "u.n", "a.m", "p.m", "ca", "cf", "al",
];

/// Verb forms recognised by the lexicon tagger: auxiliaries, modals, their
/// contractions, and frequent main verbs.
pub(crate) const VERBS: &[&str] = &[
    // auxiliaries and modals
    "is",
    "are",
    "was",
    "were",
    "am",
    "be",
    "been",
    "being",
    "do",
    "does",
    "did",
    "done",
    "doing",
    "have",
    "has",
    "had",
    "having",
    "can",
    "could",
    "will",
    "would",
    "shall",
    "should",
    "may",
    "might",
    "must",
    "isn't",
    "aren't",
    "wasn't",
    "weren't",
    "don't",
    "doesn't",
    "didn't",
    "haven't",
    "hasn't",
    "hadn't",
    "can't",
    "cannot",
    "couldn't",
    "won't",
    "wouldn't",
    "shouldn't",
    "mustn't",
    "isnt",
    "arent",
    "wasnt",
    "werent",
    "dont",
    "doesnt",
    "didnt",
    "havent",
    "hasnt",
    "hadnt",
    "cant",
    "couldnt",
    "wont",
    "wouldnt",
    "shouldnt",
    // frequent main verbs
    "go",
    "goes",
    "went",
    "gone",
    "going",
    "get",
    "gets",
    "got",
    "gotten",
    "getting",
    "make",
    "makes",
    "made",
    "making",
    "become",
    "becomes",
    "became",
    "becoming",
    "come",
    "comes",
    "came",
    "coming",
    "take",
    "takes",
    "took",
    "taken",
    "taking",
    "give",
    "gives",
    "gave",
    "given",
    "giving",
    "find",
    "finds",
    "found",
    "finding",
    "know",
    "knows",
    "knew",
    "known",
    "think",
    "thinks",
    "thought",
    "see",
    "sees",
    "saw",
    "seen",
    "say",
    "says",
    "said",
    "tell",
    "tells",
    "told",
    "use",
    "uses",
    "used",
    "using",
    "work",
    "works",
    "worked",
    "working",
    "play",
    "plays",
    "played",
    "playing",
    "start",
    "starts",
    "started",
    "begin",
    "begins",
    "began",
    "begun",
    "leave",
    "leaves",
    "left",
    "live",
    "lives",
    "lived",
    "die",
    "dies",
    "died",
    "feel",
    "feels",
    "felt",
    "manage",
    "managed",
    "win",
    "wins",
    "won",
    "lose",
    "loses",
    "lost",
    "build",
    "builds",
    "built",
    "write",
    "writes",
    "wrote",
    "written",
    "serve",
    "served",
    "enlist",
    "enlisted",
    "join",
    "joined",
    "move",
    "moved",
    "help",
    "helped",
    "create",
    "created",
    "develop",
    "developed",
    "lead",
    "leads",
    "led",
    "happen",
    "happens",
    "happened",
    "cause",
    "caused",
    "respond",
    "responded",
    "react",
    "reacted",
    "change",
    "changed",
    "affect",
    "affected",
    "end",
    "ended",
    "return",
    "returned",
    "continue",
    "continued",
    "retire",
    "retired",
    "study",
    "studied",
    "learn",
    "learned",
    "teach",
    "taught",
    "born",
    "marry",
    "married",
    "release",
    "released",
    "record",
    "recorded",
    "perform",
    "performed",
    "receive",
    "received",
    "attend",
    "attended",
    "meet",
    "met",
    "form",
    "formed",
    "found",
    "founded",
];

/// Words that never count as content when checking a question against a
/// passage: function words plus vocabulary that question frames introduce.
pub(crate) const FRAME_WORDS: &[&str] = &[
    "a",
    "an",
    "the",
    "and",
    "or",
    "but",
    "nor",
    "so",
    "yet",
    "if",
    "then",
    "than",
    "as",
    "at",
    "by",
    "for",
    "from",
    "in",
    "into",
    "of",
    "on",
    "onto",
    "to",
    "with",
    "without",
    "about",
    "after",
    "before",
    "during",
    "since",
    "until",
    "over",
    "under",
    "between",
    "through",
    "against",
    "among",
    "around",
    "up",
    "down",
    "out",
    "off",
    "not",
    "no",
    "there",
    "here",
    "also",
    "just",
    "only",
    "very",
    "too",
    "some",
    "any",
    "all",
    "each",
    "every",
    "other",
    "another",
    "such",
    "own",
    "same",
    "s",
    "t",
    "cause",
    "reason",
    "purpose",
    "result",
    "kind",
    "type",
    "name",
    "year",
    "years",
    "time",
    "much",
    "many",
    "long",
    "old",
    "far",
    "often",
    "big",
    "tall",
    "else",
    "way",
    "something",
    "anything",
    "thing",
    "things",
    "happened",
];

pub(crate) fn contains(list: &[&str], word: &str) -> bool {
    list.contains(&word)
}

pub(crate) fn is_number_word(word: &str) -> bool {
    let lower = word.to_lowercase();
    !lower.is_empty() && lower.split('-').all(|part| contains(NUMBER_WORDS, part))
}

pub(crate) fn is_month(word: &str) -> bool {
    contains(MONTHS, &word.to_lowercase())
}

/// True when a normalized token carries no content for relevance checks.
pub(crate) fn is_frame_token(token: &str) -> bool {
    contains(FRAME_WORDS, token) || contains(WH_WORDS, token) || contains(PRONOUNS, token) || contains(VERBS, token)
}
