//! Shipped corpus configurations.
//!
//! `desk_corpus_config` is the default synthetic corpus: four locales with
//! US ≫ GB ≫ CA ≳ IN training-size imbalance, a mix of shared, partially
//! shared, locale-specific, and single-locale domains, and deliberate
//! template collisions that can only be resolved by slot identity or locale
//! knowledge (restaurant vs grocery "put in an order at {x}", hockey vs
//! generic sports scores, IN locals vs GB rail). Low-resource locales carry
//! many under-resourced shared domains so the "small" category is well
//! populated.

use std::collections::BTreeMap;

use crate::corpus::{CorpusConfig, DomainSpec, LocaleSpec, SlotSpec, SplitCounts};

fn shared(values: &[&str]) -> SlotSpec {
    SlotSpec::Shared {
        values: values.iter().map(|s| s.to_string()).collect(),
    }
}

fn per_locale(pairs: &[(&str, &[&str])]) -> SlotSpec {
    SlotSpec::PerLocale {
        per_locale: pairs
            .iter()
            .map(|(l, vs)| (l.to_string(), vs.iter().map(|s| s.to_string()).collect()))
            .collect(),
    }
}

/// Split sizes from a training count: validation is ~14% of train, test is
/// 30% of train for the high-resource locales and a full train-sized sample
/// (floor 15) for CA/IN so per-category accuracies have support.
fn counts_for(locale: &str, train: usize) -> SplitCounts {
    let val = ((train as f64) * 0.14).round().max(2.0) as usize;
    let test = match locale {
        "US" | "GB" => (((train as f64) * 0.30).round() as usize).max(6),
        _ => train.max(15),
    };
    SplitCounts { train, val, test }
}

struct DomainBuilder {
    spec: DomainSpec,
}

fn domain(name: &str, templates: &[&str]) -> DomainBuilder {
    DomainBuilder {
        spec: DomainSpec {
            name: name.to_string(),
            locale_specific: false,
            templates: templates.iter().map(|s| s.to_string()).collect(),
            extra_templates: BTreeMap::new(),
            slots: BTreeMap::new(),
            counts: BTreeMap::new(),
        },
    }
}

impl DomainBuilder {
    fn locale_specific(mut self) -> Self {
        self.spec.locale_specific = true;
        self
    }

    fn slot(mut self, name: &str, spec: SlotSpec) -> Self {
        self.spec.slots.insert(name.to_string(), spec);
        self
    }

    fn extra(mut self, locale: &str, templates: &[&str]) -> Self {
        self.spec.extra_templates.insert(
            locale.to_string(),
            templates.iter().map(|s| s.to_string()).collect(),
        );
        self
    }

    fn train(mut self, pairs: &[(&str, usize)]) -> Self {
        for (locale, n) in pairs {
            self.spec
                .counts
                .insert(locale.to_string(), counts_for(locale, *n));
        }
        self
    }

    fn build(self) -> DomainSpec {
        self.spec
    }
}

const SONGS: &[&str] = &[
    "bohemian rhapsody", "shake it off", "hotel california", "rolling in the deep",
    "blinding lights", "sweet child of mine", "billie jean", "let it be",
    "smells like teen spirit", "bad guy", "uptown funk", "someone like you",
    "hey jude", "wonderwall", "firework", "halo", "viva la vida", "demons",
    "counting stars", "shape of you", "levitating", "drivers license",
    "watermelon sugar", "old town road", "dance monkey", "senorita",
    "stairway to heaven", "imagine", "yesterday", "thriller",
];

const ARTISTS: &[&str] = &[
    "taylor swift", "the beatles", "queen", "adele", "drake", "ed sheeran",
    "beyonce", "coldplay", "eminem", "rihanna", "the weeknd", "bruno mars",
    "lady gaga", "elton john", "dua lipa", "post malone", "ariana grande",
    "kendrick lamar", "billie eilish", "harry styles",
];

const CITIES: &[&str] = &[
    "seattle", "london", "toronto", "mumbai", "chicago", "manchester",
    "vancouver", "delhi", "boston", "birmingham", "calgary", "bangalore",
    "denver", "leeds", "ottawa", "pune", "austin", "glasgow", "montreal",
    "chennai", "portland", "bristol", "edmonton", "hyderabad",
];

const PEOPLE: &[&str] = &[
    "albert einstein", "marie curie", "nelson mandela", "ada lovelace",
    "isaac newton", "rosa parks", "leonardo da vinci", "jane austen",
    "martin luther king", "florence nightingale", "charles darwin",
    "amelia earhart", "mahatma gandhi", "william shakespeare", "cleopatra",
    "nikola tesla", "frida kahlo", "abraham lincoln",
];

const TOPICS: &[&str] = &[
    "the election", "climate change", "the stock market", "artificial intelligence",
    "the world cup", "space exploration", "electric cars", "the housing market",
    "renewable energy", "the olympics", "interest rates", "vaccines",
    "quantum computing", "the film festival", "self driving cars", "inflation",
];

const ITEMS: &[&str] = &[
    "milk", "eggs", "bread", "coffee", "bananas", "rice", "pasta", "butter",
    "cheese", "apples", "tomatoes", "chicken", "onions", "olive oil",
    "yogurt", "cereal", "sugar", "flour", "paper towels", "dish soap",
];

const DEVICES: &[&str] = &[
    "living room lights", "kitchen lights", "bedroom lamp", "thermostat",
    "tv", "coffee maker", "front porch light", "ceiling fan", "space heater",
    "garage door", "hallway lights", "air conditioner",
];

const TIMES: &[&str] = &[
    "6 am", "6 30 am", "7 am", "7 45 am", "8 am", "9 15 am", "noon",
    "1 pm", "3 30 pm", "5 pm", "6 45 pm", "8 pm", "9 pm", "10 30 pm",
];

const DURATIONS: &[&str] = &[
    "5 minutes", "10 minutes", "15 minutes", "20 minutes", "half an hour",
    "45 minutes", "an hour", "90 minutes", "2 hours",
];

const DAYS: &[&str] = &[
    "today", "tomorrow", "tonight", "this weekend", "on monday", "on tuesday",
    "on wednesday", "on thursday", "on friday", "on saturday", "on sunday",
];

const COUNTRIES: &[&str] = &[
    "france", "japan", "brazil", "australia", "egypt", "norway", "kenya",
    "peru", "thailand", "portugal", "iceland", "morocco", "vietnam",
    "argentina", "greece", "new zealand",
];

const EVENTS: &[&str] = &[
    "dentist appointment", "team meeting", "haircut", "flight home",
    "yoga class", "parent teacher conference", "oil change", "book club",
    "piano lesson", "doctors appointment", "lunch with sam", "gym session",
];

const LEVELS: &[&str] = &["10", "20", "25", "30", "40", "50", "60", "75", "80", "100"];

const FLIGHTS: &[&str] = &[
    "ua 423", "ba 117", "ac 856", "ai 302", "dl 98", "aa 1540", "va 12",
    "ek 501", "lh 456", "qf 8", "ba 249", "ac 33", "ua 90", "ai 131",
];

const TEAMS: &[&str] = &[
    "the lakers", "the yankees", "the cowboys", "the warriors", "arsenal",
    "chelsea", "liverpool", "the celtics", "the packers", "manchester city",
    "the dodgers", "tottenham", "the heat", "the bulls", "the red sox",
    "everton", "the eagles", "the mets", "leeds united", "the giants",
];

const NHL_TEAMS: &[&str] = &[
    "the canucks", "the maple leafs", "the oilers", "the flames",
    "the senators", "the canadiens", "the jets",
];

const IPL_TEAMS: &[&str] = &[
    "mumbai indians", "chennai super kings", "royal challengers",
    "kolkata knight riders", "rajasthan royals", "delhi capitals",
    "punjab kings", "sunrisers hyderabad",
];

const PODCASTS: &[&str] = &[
    "serial", "radiolab", "the daily", "hardcore history", "planet money",
    "freakonomics", "this american life", "stuff you should know",
    "the rest is history", "desert island discs", "99 percent invisible",
    "revisionist history",
];

const MOVIES: &[&str] = &[
    "the godfather", "inception", "spirited away", "the dark knight",
    "parasite", "casablanca", "jurassic park", "the matrix", "toy story",
    "pulp fiction", "back to the future", "the lion king", "jaws",
    "forrest gump", "interstellar", "gladiator",
];

const DISHES: &[&str] = &[
    "lasagna", "pad thai", "chicken curry", "banana bread", "risotto",
    "fish tacos", "french onion soup", "pancakes", "beef stew",
    "chocolate chip cookies", "shepherds pie", "pumpkin soup", "paella",
    "butter chicken", "apple crumble", "mushroom stroganoff",
];

const PLACES: &[&str] = &[
    "the airport", "downtown", "the stadium", "the mall", "city hall",
    "the university", "the harbour", "the convention center", "the zoo",
    "the museum", "central station", "the hospital",
];

const STOCKS: &[&str] = &[
    "acme", "apple", "tesla", "microsoft", "amazon", "google", "nvidia",
    "shell", "barclays", "boeing", "ford", "netflix", "intel", "disney",
];

const UNITS_A: &[&str] = &[
    "ounces", "grams", "miles", "kilometers", "cups", "liters", "pounds",
    "inches", "feet", "celsius",
];

const UNITS_B: &[&str] = &[
    "kilograms", "milliliters", "yards", "meters", "gallons", "pints",
    "stone", "centimeters", "fahrenheit", "tablespoons",
];

const NUMS: &[&str] = &["2", "3", "4", "5", "6", "8", "10", "12", "20", "100"];

const COUNT_WORDS: &[&str] = &["two", "three", "four", "five", "six", "eight"];

const CONTACTS: &[&str] = &[
    "mom", "dad", "grandma", "uncle joe", "aunt priya", "my boss",
    "the dentist", "sarah", "david", "the office", "my sister", "raj",
];

const GB_STATIONS: &[&str] = &[
    "paddington", "kings cross", "manchester piccadilly", "euston",
    "birmingham new street", "leeds station", "bristol temple meads",
    "edinburgh waverley", "york station", "reading station", "oxford station",
    "brighton station",
];

const IN_STATIONS: &[&str] = &[
    "borivali", "andheri", "churchgate", "dadar", "thane", "bandra",
    "kurla", "virar", "mulund", "ghatkopar", "vashi", "panvel",
];

const RADIO_STATIONS: &[&str] = &[
    "radio one", "radio two", "radio four", "radio five live", "six music",
    "the world service", "radio three",
];

const CA_PLACES: &[&str] = &[
    "whistler", "banff", "the trans canada highway", "mont tremblant",
    "the coquihalla", "jasper", "thunder bay", "the four oh one",
    "lake louise", "sudbury",
];

const CINEMAS: &[&str] = &[
    "the grand cinema", "the odeon", "the multiplex", "the drive in",
    "the imax downtown", "the roxy", "the paramount",
];

// Per-locale venue pools for the locale-specific booking domains. Disjoint
// across locales on purpose: the same booking phrasing shows up everywhere
// while the names never cross borders.
const RESTAURANTS_US: &[&str] = &[
    "olive garden", "the cheesecake factory", "joes crab shack",
    "the capital grille", "pikes landing", "blue ridge smokehouse",
    "the rusty anchor", "marios little italy", "sunset cantina",
    "the golden spoon", "harbor house grill", "the magnolia table",
    "brooklyn burger bar", "the copper kettle", "lone star steakhouse",
    "the garden bistro",
];

const RESTAURANTS_GB: &[&str] = &[
    "the fox club london", "the ivy", "dishoom covent garden",
    "the shard grill", "rules of mayfair", "the crown and anchor",
    "the kings head", "bella italia soho", "the riverside brasserie",
    "hawksmoor spitalfields", "the cotswold arms", "st johns smithfield",
    "the old bell tavern", "camden lock kitchen", "the butchers arms",
    "quo vadis dean street",
];

const RESTAURANTS_CA: &[&str] = &[
    "maple ridge diner", "poutine palace", "the timber lodge",
    "lakeview bistro toronto", "the loon and moose", "prairie harvest table",
    "the bluenose galley", "mount royal grill", "the salty beaver",
    "granville island kitchen", "the northern pike", "banff springs bistro",
    "the prairie oyster", "chinook gardens", "the grand maple hall",
    "caribou creek kitchen", "the fiddlehead room", "stanley park teahouse",
    "the yukon smokehouse", "trois rivieres brasserie", "the bay street chop house",
    "okanagan harvest room",
];

const RESTAURANTS_IN: &[&str] = &[
    "bukhara delhi", "saravana bhavan", "the bombay canteen",
    "karims jama masjid", "trishna fort mumbai", "peter cat calcutta",
    "the rajdhani thali house", "indian accent lodhi road",
    "dakshin chennai", "gulati pandara road", "cafe madras matunga",
    "paradise biryani hyderabad", "the grand mughal darbar",
    "annalakshmi coimbatore", "leopold cafe colaba", "the malabar pepper house",
    "shree thaker bhojanalay", "tunday kababi lucknow", "the nizam kitchen",
    "vidyarthi bhavan bangalore",
];

const HOTELS_US: &[&str] = &[
    "the grand hyatt midtown", "sunset palms resort", "the liberty inn",
    "redwood lodge", "the beacon hotel boston", "desert rose suites",
    "the lakeshore marriott", "golden gate plaza hotel", "the aspen chalet",
    "magnolia grand new orleans", "the brickyard inn", "pacific view hotel",
];

const HOTELS_GB: &[&str] = &[
    "the savoy", "claridges", "the dorchester", "the lanesborough",
    "the goring", "the randolph oxford", "the midland manchester",
    "the balmoral edinburgh", "the grand brighton", "the queens leeds",
    "the swan at lavenham", "the castle hotel windsor",
];

const DELIVERY_US: &[&str] = &[
    "grubhub", "doordash", "postmates", "seamless", "caviar",
    "pizza hut delivery", "panda express", "chipotle", "five guys",
    "wingstop", "papa johns", "taco bell",
];

const DELIVERY_GB: &[&str] = &[
    "deliveroo", "just eat", "hungryhouse", "pizza express delivery",
    "nandos delivery", "wagamama to go", "pret delivery", "itsu",
    "greggs delivery", "franco manca", "leon", "byron burgers",
];

const DELIVERY_IN: &[&str] = &[
    "swiggy", "zomato", "dominos india", "faasos", "box8", "freshmenu",
    "behrouz biryani", "ovenstory", "wow momo", "haldirams online",
    "mcdelivery india", "kfc india", "biryani blues", "the good bowl",
    "eatfit", "chaayos delivery", "goli vada pav", "rebel foods",
    "sweet truth", "lunchbox india", "firangi bake", "mandarin oak",
    "slay coffee", "nashta express",
];

const GROCERS_US: &[&str] = &[
    "whole foods", "safeway", "trader joes", "kroger", "wegmans",
    "publix", "albertsons", "sprouts", "harris teeter", "piggly wiggly",
    "stop and shop", "winco foods",
];

const GROCERS_CA: &[&str] = &[
    "loblaws", "sobeys", "no frills", "metro grocer", "save on foods",
    "real canadian superstore", "farm boy", "longos", "thrifty foods",
    "co op grocery", "maxi quebec", "freshco", "provigo", "iga quebec",
    "giant tiger grocery", "foodland ontario", "colemans newfoundland",
    "quality foods bc", "the north mart", "buy low foods",
    "pattison food mart", "country grocer", "valu mart", "marches tradition",
    "nesters market", "sobeys urban fresh",
];

const TAXIS_US: &[&str] = &[
    "yellow cab", "lyft", "curb", "arro", "flywheel", "checker taxi",
    "city cab co", "liberty rides", "metro taxi", "orange cab seattle",
];

const TAXIS_GB: &[&str] = &[
    "addison lee", "black cab london", "gett", "streetcars manchester",
    "central taxis edinburgh", "veezu", "uber exec london", "a2b radio cars",
    "swift taxis leeds", "station taxis york",
];

const TAXIS_IN: &[&str] = &[
    "ola", "meru cabs", "uber india", "mega cabs", "easy cabs",
    "savaari", "fasttrack chennai", "kaali peeli", "jugnoo", "blu smart",
    "rido bikes", "quick ride pune", "celcabs", "bharat taxi",
    "hire me auto", "namma tygr", "wings cabs", "city lift india",
];

/// The default desk-scale corpus configuration (four locales, 29 domains).
pub fn desk_corpus_config(seed: u64) -> CorpusConfig {
    let domains = vec![
        // ---- locale-independent, available everywhere -------------------
        domain(
            "music_play",
            &[
                "play {song}",
                "play {song} by {artist}",
                "put on {song}",
                "i want to listen to {artist}",
                "play some music by {artist}",
                "play the song {song}",
            ],
        )
        .slot("song", shared(SONGS))
        .slot("artist", shared(ARTISTS))
        .extra("GB", &["stick {song} on", "play us {song}"])
        .extra("CA", &["throw on {song}"])
        .extra("IN", &["play {song} song", "put {song} on please"])
        .train(&[("US", 800), ("GB", 270), ("CA", 45), ("IN", 30)])
        .build(),
        domain(
            "weather",
            &[
                "what's the weather in {city}",
                "will it rain in {city} {day}",
                "do i need an umbrella {day}",
                "{city} weather forecast",
                "how hot is it in {city} {day}",
            ],
        )
        .slot("city", shared(CITIES))
        .slot("day", shared(DAYS))
        .extra("GB", &["is it going to chuck it down in {city}", "will i need a brolly {day}"])
        .extra("CA", &["how cold is it in {city}", "what's the wind chill in {city} {day}"])
        .extra("IN", &["what is the temperature in {city} right now", "{city} weather report please"])
        .train(&[("US", 560), ("GB", 200), ("CA", 35), ("IN", 22)])
        .build(),
        domain(
            "alarms_timers",
            &[
                "set an alarm for {time}",
                "set a timer for {duration}",
                "wake me up at {time}",
                "cancel my {time} alarm",
                "start a {duration} timer",
            ],
        )
        .slot("time", shared(TIMES))
        .slot("duration", shared(DURATIONS))
        .train(&[("US", 380), ("GB", 150), ("CA", 14), ("IN", 10)])
        .build(),
        domain(
            "shopping_list",
            &[
                "add {item} to my shopping list",
                "put {item} on the list",
                "what's on my shopping list",
                "remove {item} from the list",
            ],
        )
        .slot("item", shared(ITEMS))
        .train(&[("US", 240), ("GB", 120), ("CA", 14), ("IN", 8)])
        .build(),
        domain(
            "knowledge_qa",
            &[
                "who is {person}",
                "how tall is {person}",
                "what is the capital of {country}",
                "tell me about {topic}",
                "when was {person} born",
            ],
        )
        .slot("person", shared(PEOPLE))
        .slot("country", shared(COUNTRIES))
        .slot("topic", shared(TOPICS))
        .train(&[("US", 360), ("GB", 150), ("CA", 12), ("IN", 8)])
        .build(),
        domain(
            "smart_home",
            &[
                "turn on the {device}",
                "turn off the {device}",
                "dim the {device}",
                "set the {device} to {level} percent",
                "is the {device} on",
            ],
        )
        .slot("device", shared(DEVICES))
        .slot("level", shared(LEVELS))
        .extra("IN", &["switch off the {device}", "switch on the {device}"])
        .train(&[("US", 300), ("GB", 140), ("CA", 18), ("IN", 10)])
        .build(),
        domain(
            "calendar",
            &[
                "what's on my calendar {day}",
                "add {event} to my calendar",
                "when is my {event}",
                "move my {event} to {day}",
            ],
        )
        .slot("event", shared(EVENTS))
        .slot("day", shared(DAYS))
        .train(&[("US", 200), ("GB", 100), ("CA", 10), ("IN", 6)])
        .build(),
        domain(
            "news_briefing",
            &[
                "what's the news",
                "give me the headlines",
                "any news about {topic}",
                "play the news briefing",
                "what's the latest on {topic}",
            ],
        )
        .slot("topic", shared(TOPICS))
        .train(&[("US", 190), ("GB", 95), ("CA", 10), ("IN", 8)])
        .build(),
        domain(
            "unit_convert",
            &[
                "how many {unit_a} in a {unit_b}",
                "convert {num} {unit_a} to {unit_b}",
                "what is {num} {unit_a} in {unit_b}",
            ],
        )
        .slot("unit_a", shared(UNITS_A))
        .slot("unit_b", shared(UNITS_B))
        .slot("num", shared(NUMS))
        .train(&[("US", 130), ("GB", 65), ("CA", 8), ("IN", 6)])
        .build(),
        domain(
            "phone_calls",
            &[
                "call {contact}",
                "dial {contact}",
                "ring {contact} on speaker",
                "phone {contact} now",
            ],
        )
        .slot("contact", shared(CONTACTS))
        .train(&[("US", 250), ("GB", 115), ("CA", 10), ("IN", 8)])
        .build(),
        domain(
            "flight_status",
            &[
                "is flight {flight} on time",
                "when does flight {flight} land",
                "status of flight {flight}",
                "has flight {flight} departed",
            ],
        )
        .slot("flight", shared(FLIGHTS))
        .train(&[("US", 170), ("GB", 85), ("CA", 6), ("IN", 6)])
        .build(),
        // Collides with hockey_updates (CA) and cricket_scores (IN): same
        // score-asking patterns, different team vocabularies.
        domain(
            "sports_scores",
            &[
                "what's the {team} score",
                "did {team} win",
                "score of the {team} game",
                "how are {team} doing this season",
            ],
        )
        .slot("team", shared(TEAMS))
        .train(&[("US", 320), ("GB", 130), ("CA", 10)])
        .build(),
        // ---- locale-independent, partial availability -------------------
        // "put on {podcast}" collides with music_play's "put on {song}".
        domain(
            "podcast_play",
            &[
                "play the {podcast} podcast",
                "put on {podcast}",
                "latest episode of {podcast}",
                "resume {podcast}",
            ],
        )
        .slot("podcast", shared(PODCASTS))
        .train(&[("US", 260), ("GB", 95), ("CA", 8)])
        .build(),
        domain(
            "movie_times",
            &[
                "showtimes for {movie}",
                "when is {movie} playing",
                "movie times at {cinema}",
                "is {movie} still in theaters",
            ],
        )
        .slot("movie", shared(MOVIES))
        .slot("cinema", shared(CINEMAS))
        .train(&[("US", 190), ("GB", 15), ("CA", 12)])
        .build(),
        domain(
            "recipe_search",
            &[
                "how do i make {dish}",
                "recipe for {dish}",
                "ingredients for {dish}",
                "show me a {dish} recipe",
            ],
        )
        .slot("dish", shared(DISHES))
        .train(&[("US", 160), ("GB", 85)])
        .build(),
        domain(
            "traffic_report",
            &[
                "how is traffic to {place}",
                "traffic on the way to {place}",
                "how long to drive to {place}",
            ],
        )
        .slot("place", shared(PLACES))
        .train(&[("US", 18), ("GB", 185)])
        .build(),
        domain(
            "stock_quotes",
            &[
                "what's the {stock} stock price",
                "how is {stock} trading",
                "did {stock} go up today",
            ],
        )
        .slot("stock", shared(STOCKS))
        .train(&[("US", 120), ("GB", 60)])
        .build(),
        domain(
            "public_transit",
            &[
                "when is the next bus to {place}",
                "bus times to {place}",
                "how do i get to {place} by bus",
            ],
        )
        .slot("place", shared(PLACES))
        .train(&[("US", 12), ("GB", 175), ("IN", 14)])
        .build(),
        // ---- locale-specific domains ------------------------------------
        // The booking/order skeletons repeat across these domains, so the
        // label turns on which locale-exclusive pool the name belongs to.
        domain(
            "restaurant_booking",
            &[
                "book a table at {venue}",
                "make a booking at {venue}",
                "put in an order at {venue}",
                "make a booking with {venue}",
                "reserve {venue} for tonight",
                "is {venue} taking reservations",
            ],
        )
        .locale_specific()
        .slot(
            "venue",
            per_locale(&[
                ("US", RESTAURANTS_US),
                ("GB", RESTAURANTS_GB),
                ("CA", RESTAURANTS_CA),
                ("IN", RESTAURANTS_IN),
            ]),
        )
        .train(&[("US", 380), ("GB", 140), ("CA", 10), ("IN", 8)])
        .build(),
        domain(
            "hotel_booking",
            &[
                "book a room at {hotel}",
                "make a booking at {hotel}",
                "reserve {hotel} for two nights",
                "check availability at {hotel}",
            ],
        )
        .locale_specific()
        .slot("hotel", per_locale(&[("US", HOTELS_US), ("GB", HOTELS_GB)]))
        .train(&[("US", 180), ("GB", 95)])
        .build(),
        domain(
            "food_delivery",
            &[
                "put in an order at {brand}",
                "set me up with {brand}",
                "order dinner from {brand}",
                "get food delivered from {brand}",
            ],
        )
        .locale_specific()
        .slot(
            "brand",
            per_locale(&[("US", DELIVERY_US), ("GB", DELIVERY_GB), ("IN", DELIVERY_IN)]),
        )
        .train(&[("US", 190), ("GB", 100), ("IN", 28)])
        .build(),
        domain(
            "grocery_order",
            &[
                "put in an order at {store}",
                "set me up with {store}",
                "order my groceries from {store}",
                "book a delivery slot at {store}",
                "add my list to the {store} cart",
            ],
        )
        .locale_specific()
        .slot("store", per_locale(&[("US", GROCERS_US), ("CA", GROCERS_CA)]))
        .train(&[("US", 160), ("CA", 36)])
        .build(),
        domain(
            "taxi_booking",
            &[
                "make a booking with {service}",
                "set me up with {service}",
                "book a cab with {service}",
                "get me a ride with {service}",
            ],
        )
        .locale_specific()
        .slot(
            "service",
            per_locale(&[("US", TAXIS_US), ("GB", TAXIS_GB), ("IN", TAXIS_IN)]),
        )
        .train(&[("US", 170), ("GB", 90), ("IN", 18)])
        .build(),
        // ---- single-locale domains ---------------------------------------
        // GB rail and IN locals share train-time phrasings; only the station
        // pool and the request locale separate them.
        domain(
            "national_rail",
            &[
                "when is the next train to {gb_station}",
                "train times to {gb_station}",
                "is the train to {gb_station} on time",
                "book a train ticket to {gb_station}",
                "when is the next train",
                "is my train on time",
                "check the train times",
            ],
        )
        .slot("gb_station", shared(GB_STATIONS))
        .train(&[("GB", 110)])
        .build(),
        domain(
            "bbc_radio",
            &[
                "play bbc {radio_station}",
                "put on {radio_station}",
                "switch to {radio_station}",
            ],
        )
        .slot("radio_station", shared(RADIO_STATIONS))
        .train(&[("GB", 75)])
        .build(),
        domain(
            "hockey_updates",
            &[
                "what's the {nhl_team} score",
                "did {nhl_team} win",
                "when do {nhl_team} play next",
                "{nhl_team} game updates",
                "did we win last night",
                "what was the final score",
                "when is the next game",
            ],
        )
        .slot("nhl_team", shared(NHL_TEAMS))
        .train(&[("CA", 35)])
        .build(),
        domain(
            "winter_roads",
            &[
                "are the roads icy near {ca_place}",
                "road conditions to {ca_place}",
                "is the highway to {ca_place} closed",
                "do i need chains to get to {ca_place}",
            ],
        )
        .slot("ca_place", shared(CA_PLACES))
        .train(&[("CA", 25)])
        .build(),
        domain(
            "cricket_scores",
            &[
                "what's the {ipl_team} score",
                "did {ipl_team} win",
                "when do {ipl_team} play next",
                "{ipl_team} match updates",
                "did we win last night",
                "what was the final score",
                "when is the next game",
            ],
        )
        .slot("ipl_team", shared(IPL_TEAMS))
        .train(&[("IN", 24)])
        .build(),
        domain(
            "local_trains",
            &[
                "when is the next train to {in_station}",
                "train times to {in_station}",
                "is the local to {in_station} running late",
                "which platform for the {in_station} local",
                "when is the next train",
                "is my train on time",
                "check the train times",
            ],
        )
        .slot("in_station", shared(IN_STATIONS))
        .train(&[("IN", 18)])
        .build(),
    ];

    let locales: Vec<String> = ["US", "GB", "CA", "IN"].iter().map(|s| s.to_string()).collect();
    let mut locale_totals = BTreeMap::new();
    for l in &locales {
        let mut spec = LocaleSpec {
            train: 0,
            val: 0,
            test: 0,
        };
        for d in &domains {
            if let Some(c) = d.counts.get(l) {
                spec.train += c.train;
                spec.val += c.val;
                spec.test += c.test;
            }
        }
        locale_totals.insert(l.clone(), spec);
    }

    CorpusConfig {
        seed,
        small_threshold: 20,
        locales,
        locale_totals,
        domains,
    }
}

/// A deliberately small two-locale corpus for smoke tests and pipeline
/// determinism checks.
pub fn tiny_corpus_config(seed: u64) -> CorpusConfig {
    let domains = vec![
        domain("music_play", &["play {song}", "put on {song}"])
            .slot("song", shared(&SONGS[0..8]))
            .train(&[("US", 40), ("GB", 24)])
            .build(),
        domain("weather", &["weather in {city}", "will it rain in {city}"])
            .slot("city", shared(&CITIES[0..8]))
            .train(&[("US", 36), ("GB", 20)])
            .build(),
        domain(
            "restaurant_booking",
            &["book a table at {venue}", "make a booking at {venue}"],
        )
        .locale_specific()
        .slot(
            "venue",
            per_locale(&[("US", &RESTAURANTS_US[0..6]), ("GB", &RESTAURANTS_GB[0..6])]),
        )
        .train(&[("US", 30), ("GB", 18)])
        .build(),
        domain("national_rail", &["train times to {gb_station}"])
            .slot("gb_station", shared(&GB_STATIONS[0..6]))
            .train(&[("GB", 16)])
            .build(),
    ];

    let locales: Vec<String> = ["US", "GB"].iter().map(|s| s.to_string()).collect();
    let mut locale_totals = BTreeMap::new();
    for l in &locales {
        let mut spec = LocaleSpec {
            train: 0,
            val: 0,
            test: 0,
        };
        for d in &domains {
            if let Some(c) = d.counts.get(l) {
                spec.train += c.train;
                spec.val += c.val;
                spec.test += c.test;
            }
        }
        locale_totals.insert(l.clone(), spec);
    }

    CorpusConfig {
        seed,
        small_threshold: 20,
        locales,
        locale_totals,
        domains,
    }
}

use crate::experiment::ExperimentConfig;
use crate::model::{ModelDims, Variant};
use crate::trainer::TrainConfig;

/// The default experiment: the desk-scale corpus, all five variants, and a
/// training configuration sized to finish on a laptop CPU. Model dimensions
/// are scaled down from the paper-sized defaults for the same reason; batch
/// size, optimizer settings, and dropout keep their standard values.
pub fn desk_experiment_config() -> ExperimentConfig {
    ExperimentConfig {
        corpus: desk_corpus_config(13),
        train: TrainConfig {
            epochs: 8,
            seed: 7,
            dims: ModelDims {
                embed_dim: 24,
                lstm_dim: 24,
                attn_dim: 12,
                head_hidden: 48,
            },
            embeddings_trainable: true,
            ..Default::default()
        },
        variants: Variant::ALL.to_vec(),
    }
}

/// A minutes-scale smoke experiment over the tiny two-locale corpus.
pub fn tiny_experiment_config() -> ExperimentConfig {
    ExperimentConfig {
        corpus: tiny_corpus_config(5),
        train: TrainConfig {
            batch_size: 16,
            epochs: 3,
            seed: 3,
            dims: ModelDims {
                embed_dim: 10,
                lstm_dim: 8,
                attn_dim: 6,
                head_hidden: 12,
            },
            dropout: 0.2,
            embeddings_trainable: true,
            ..Default::default()
        },
        variants: Variant::ALL.to_vec(),
    }
}
