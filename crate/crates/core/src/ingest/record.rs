use chrono::{DateTime, NaiveDate, Utc};
use serde::de::IgnoredAny;
use serde::{Deserialize, Serialize};

/// One original tweet pulled out of an archive line.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub id: u64,
    pub created_at: DateTime<Utc>,
    /// Extended full text when the object carries one, else the base text.
    pub text: String,
    /// Code-point range `[start, end)` of `text` that counts toward the limit.
    pub display_range: Option<(usize, usize)>,
    pub lang: String,
    /// Client name between the anchor tags of the source markup.
    pub source_label: String,
    pub is_retweet: bool,
    pub is_delete_event: bool,
}

impl TweetRecord {
    pub fn day(&self) -> NaiveDate {
        self.created_at.date_naive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    DeleteEvent,
    Retweet,
    Unparseable,
    MissingFields,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Parsed {
    Record(TweetRecord),
    Skip(SkipReason),
}

#[derive(Deserialize)]
struct RawExtended {
    full_text: Option<String>,
    display_text_range: Option<(usize, usize)>,
}

#[derive(Deserialize)]
struct RawTweet {
    delete: Option<IgnoredAny>,
    retweeted_status: Option<IgnoredAny>,
    id: Option<u64>,
    id_str: Option<String>,
    created_at: Option<String>,
    timestamp_ms: Option<serde_json::Value>,
    text: Option<String>,
    full_text: Option<String>,
    display_text_range: Option<(usize, usize)>,
    extended_tweet: Option<RawExtended>,
    lang: Option<String>,
    source: Option<String>,
}

/// Parses one archive line. Never fails: anything unusable becomes a skip.
pub fn parse_record(line: &[u8]) -> Parsed {
    let raw: RawTweet = match serde_json::from_slice(line) {
        Ok(raw) => raw,
        Err(_) => return Parsed::Skip(SkipReason::Unparseable),
    };
    if raw.delete.is_some() {
        return Parsed::Skip(SkipReason::DeleteEvent);
    }
    if raw.retweeted_status.is_some() {
        return Parsed::Skip(SkipReason::Retweet);
    }

    let id = raw
        .id
        .or_else(|| raw.id_str.as_deref().and_then(|s| s.parse().ok()));
    let created_at = raw
        .created_at
        .as_deref()
        .and_then(parse_timestamp)
        .or_else(|| raw.timestamp_ms.as_ref().and_then(parse_millis));
    let (text, display_range) = match raw.extended_tweet {
        Some(RawExtended {
            full_text: Some(full),
            display_text_range,
        }) => (Some(full), display_text_range),
        _ => match raw.full_text {
            Some(full) => (Some(full), raw.display_text_range),
            None => (raw.text, raw.display_text_range),
        },
    };
    let lang = raw.lang.filter(|l| !l.is_empty());

    match (id, created_at, text, lang) {
        (Some(id), Some(created_at), Some(text), Some(lang)) => Parsed::Record(TweetRecord {
            id,
            created_at,
            text,
            display_range,
            lang,
            source_label: raw
                .source
                .as_deref()
                .map(source_label)
                .unwrap_or_default(),
            is_retweet: false,
            is_delete_event: false,
        }),
        _ => Parsed::Skip(SkipReason::MissingFields),
    }
}

fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    DateTime::parse_from_str(s, "%a %b %d %H:%M:%S %z %Y")
        .or_else(|_| DateTime::parse_from_rfc3339(s))
        .ok()
        .map(|dt| dt.with_timezone(&Utc))
}

fn parse_millis(v: &serde_json::Value) -> Option<DateTime<Utc>> {
    let ms = match v {
        serde_json::Value::String(s) => s.parse::<i64>().ok()?,
        serde_json::Value::Number(n) => n.as_i64()?,
        _ => return None,
    };
    DateTime::from_timestamp_millis(ms)
}

/// `<a href="..." rel="nofollow">Twitter for iPhone</a>` → `Twitter for iPhone`.
/// Plain strings pass through unchanged.
pub fn source_label(markup: &str) -> String {
    let inner = match (markup.find('>'), markup.rfind("</a>")) {
        (Some(open), Some(close)) if open < close => &markup[open + 1..close],
        _ => markup,
    };
    inner.trim().to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWEET: &str = r#"{"created_at":"Wed Oct 10 20:19:24 +0000 2018","id":1050118621198921728,"id_str":"1050118621198921728","text":"@alice hi","display_text_range":[7,9],"source":"<a href=\"http://twitter.com/download/iphone\" rel=\"nofollow\">Twitter for iPhone</a>","lang":"en"}"#;

    #[test]
    fn parses_plain_tweet() {
        let Parsed::Record(rec) = parse_record(TWEET.as_bytes()) else {
            panic!("expected a record");
        };
        assert_eq!(rec.id, 1050118621198921728);
        assert_eq!(rec.text, "@alice hi");
        assert_eq!(rec.display_range, Some((7, 9)));
        assert_eq!(rec.lang, "en");
        assert_eq!(rec.source_label, "Twitter for iPhone");
        assert_eq!(rec.day(), NaiveDate::from_ymd_opt(2018, 10, 10).unwrap());
    }

    #[test]
    fn prefers_extended_text() {
        let line = r#"{"created_at":"Wed Oct 10 20:19:24 +0000 2018","id":1,"text":"short…","truncated":true,"extended_tweet":{"full_text":"short but actually much longer","display_text_range":[0,30]},"lang":"en","source":"Twitter Web Client"}"#;
        let Parsed::Record(rec) = parse_record(line.as_bytes()) else {
            panic!("expected a record");
        };
        assert_eq!(rec.text, "short but actually much longer");
        assert_eq!(rec.display_range, Some((0, 30)));
        assert_eq!(rec.source_label, "Twitter Web Client");
    }

    #[test]
    fn skips() {
        let delete = r#"{"delete":{"status":{"id":1,"id_str":"1","user_id":2},"timestamp_ms":"1500000000000"}}"#;
        assert_eq!(parse_record(delete.as_bytes()), Parsed::Skip(SkipReason::DeleteEvent));

        let retweet = r#"{"created_at":"Wed Oct 10 20:19:24 +0000 2018","id":1,"text":"RT @x: y","lang":"en","retweeted_status":{"id":2}}"#;
        assert_eq!(parse_record(retweet.as_bytes()), Parsed::Skip(SkipReason::Retweet));

        assert_eq!(
            parse_record(&TWEET.as_bytes()[..40]),
            Parsed::Skip(SkipReason::Unparseable)
        );
        assert_eq!(parse_record(b"{\"id\":1}"), Parsed::Skip(SkipReason::MissingFields));
    }

    #[test]
    fn null_retweet_is_original() {
        let line = r#"{"created_at":"2018-10-10T20:19:24Z","id":1,"text":"x","lang":"en","retweeted_status":null}"#;
        assert!(matches!(parse_record(line.as_bytes()), Parsed::Record(_)));
    }

    #[test]
    fn millisecond_timestamps() {
        let line = r#"{"timestamp_ms":"1509999999000","id":1,"text":"x","lang":"en"}"#;
        let Parsed::Record(rec) = parse_record(line.as_bytes()) else {
            panic!("expected a record");
        };
        assert_eq!(rec.day(), NaiveDate::from_ymd_opt(2017, 11, 6).unwrap());
    }
}
