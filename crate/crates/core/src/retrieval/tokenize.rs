use std::collections::HashSet;

/// Lowercase and split on runs of non-alphanumeric characters. No stemming.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// [`tokenize`], dropping any token in `stopwords`.
pub fn tokenize_with(text: &str, stopwords: Option<&Stopwords>) -> Vec<String> {
    let mut tokens = tokenize(text);
    if let Some(sw) = stopwords {
        tokens.retain(|t| !sw.contains(t));
    }
    tokens
}

#[derive(Debug, Clone, Default)]
pub struct Stopwords(HashSet<String>);

const ENGLISH: &[&str] = &[
    "a", "about", "an", "and", "are", "as", "at", "be", "by", "do", "does", "for", "from", "how", "i", "in", "is",
    "it", "of", "on", "or", "that", "the", "this", "to", "was", "what", "when", "where", "which", "who", "will",
    "with", "would", "you", "your",
];

impl Stopwords {
    pub fn english() -> Self {
        Self(ENGLISH.iter().map(|s| s.to_string()).collect())
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }
}

impl<S: Into<String>> FromIterator<S> for Stopwords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self(iter.into_iter().map(Into::into).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_and_lowercases() {
        assert_eq!(
            tokenize("Are you looking for Rice University?"),
            ["are", "you", "looking", "for", "rice", "university"]
        );
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("COVID-19"), ["covid", "19"]);
        assert_eq!(tokenize("  --  "), Vec::<String>::new());
    }

    #[test]
    fn stopwords_only_when_requested() {
        let sw = Stopwords::english();
        assert_eq!(tokenize_with("Are you a cat", Some(&sw)), ["cat"]);
        assert_eq!(tokenize_with("Are you a cat", None).len(), 4);
    }
}
