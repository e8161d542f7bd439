//! Tokenization and the fixed vocabularies the world generator draws from.

use std::collections::BTreeSet;

/// Sub-goal an agent should state when it backs out of an error screen.
pub const RECOVERY_SUBGOAL: &str = "go back to the previous screen";

/// Words used by goal and sub-goal templates. They carry no task content.
pub const STOPWORDS: &[&str] = &[
    "a", "and", "back", "button", "enter", "field", "for", "go", "in", "menu", "of", "open",
    "option", "page", "previous", "read", "screen", "search", "select", "tap", "the", "then",
    "to", "type", "value",
];

pub const NAV_WORDS: &[&str] = &[
    "settings", "network", "wifi", "bluetooth", "display", "brightness", "sound", "alarms",
    "contacts", "calls", "messages", "camera", "gallery", "photos", "albums", "music",
    "playlists", "podcasts", "downloads", "files", "documents", "folders", "calendar", "events",
    "reminders", "notes", "maps", "directions", "transit", "parking", "profile", "account",
    "privacy", "security", "passwords", "payments", "wallet", "cards", "orders", "cart",
    "wishlist", "checkout", "shipping", "returns", "support", "help", "feedback", "about",
    "updates", "apps", "widgets", "themes", "wallpaper", "fonts", "language", "keyboard",
    "region", "clock", "timer", "stopwatch", "weather", "forecast", "radar", "news",
    "headlines", "sports", "finance", "stocks", "crypto", "budget", "expenses", "income",
    "reports", "charts", "export", "import", "backup", "restore", "sync", "cloud", "sharing",
    "devices", "printers", "hotspot", "vpn", "airplane", "location", "permissions",
    "notifications", "focus", "family", "friends", "groups", "channels", "inbox", "drafts",
    "archive", "trash", "labels", "filters", "signature", "vacation", "storagehub", "library",
    "subscriptions", "history", "bookmarks", "tabs", "extensions",
];

pub const VALUE_WORDS: &[&str] = &[
    "battery", "storage", "memory", "signal", "temperature", "speed", "balance", "steps",
    "score", "distance", "price", "rating", "level", "usage", "humidity", "altitude", "volume",
    "progress", "quota", "credits", "points", "votes", "views", "followers", "likes", "pages",
    "minutes", "hours",
];

pub const QUERY_WORDS: &[&str] = &[
    "pizza", "jazz", "flights", "hotels", "coffee", "museum", "recipes", "tickets", "sneakers",
    "laptops", "gardening", "yoga", "sushi", "bicycles", "concerts", "pharmacy", "florist",
    "bakery", "libraries", "beaches", "hiking", "painting", "chess", "tennis",
];

pub const FIELD_WORDS: &[&str] =
    &["query", "keyword", "address", "name", "note", "message", "title", "term"];

/// Labels on error screens; disjoint from every task vocabulary.
pub const NOISE_WORDS: &[&str] = &[
    "advert", "promo", "popup", "banner", "sponsored", "cookie", "survey", "offer", "coupon",
    "upsell", "giveaway", "newsletter", "trial", "premium", "spam", "deal", "bonus", "flash",
    "sweepstakes", "lottery", "jackpot", "clickbait", "teaser", "interstitial",
];

/// Lowercased alphanumeric tokens (`/`, `.` and `-` kept inside numbers).
pub fn tokenize(s: &str) -> Vec<String> {
    s.split(|c: char| !(c.is_alphanumeric() || c == '.' || c == '/' || c == '-'))
        .map(|t| t.trim_matches(|c: char| c == '.' || c == '-' || c == '/'))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn content_tokens(s: &str) -> BTreeSet<String> {
    tokenize(s).into_iter().filter(|t| !STOPWORDS.contains(&t.as_str())).collect()
}

/// Fraction of `probe`'s content tokens present in `reference`.
pub fn coverage(probe: &BTreeSet<String>, reference: &BTreeSet<String>) -> f64 {
    if probe.is_empty() {
        return 0.0;
    }
    probe.iter().filter(|t| reference.contains(*t)).count() as f64 / probe.len() as f64
}

/// Goal clauses in order, each reduced to its content tokens.
pub fn goal_clauses(goal: &str) -> Vec<BTreeSet<String>> {
    goal.split(',').map(content_tokens).filter(|c| !c.is_empty()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocabularies_are_disjoint() {
        let lists = [NAV_WORDS, VALUE_WORDS, QUERY_WORDS, FIELD_WORDS, NOISE_WORDS, STOPWORDS];
        let mut seen = BTreeSet::new();
        for list in lists {
            for w in list {
                assert!(seen.insert(*w), "duplicate vocabulary word {w}");
                assert_eq!(tokenize(w), vec![w.to_string()]);
            }
        }
    }

    #[test]
    fn tokenize_keeps_numbers() {
        assert_eq!(tokenize("Battery 72, then 1/2!"), vec!["battery", "72", "then", "1/2"]);
        assert_eq!(tokenize("0.50."), vec!["0.50"]);
    }

    #[test]
    fn clauses_drop_template_words() {
        let c = goal_clauses("Go to settings, then search pizza, then read battery");
        assert_eq!(c.len(), 3);
        assert!(c[0].contains("settings") && c[0].len() == 1);
        assert!(c[1].contains("pizza"));
        assert!(c[2].contains("battery"));
    }
}
