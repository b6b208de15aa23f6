"""Byte-exact preprocessing fixtures: (step, input, expected)."""

MASK = "\U0001f637"
JOY = "\U0001f602"
US_FLAG = "\U0001f1fa\U0001f1f8"
HEART_VS = "❤️"
THUMBS_MEDIUM = "\U0001f44d\U0001f3fd"
UNKNOWN = "\U0001faec"  # emoji-block codepoint absent from the shipped table

GOLDEN = [
    ("unescape_html", "Tom &amp; Jerry", "Tom & Jerry"),
    ("unescape_html", "&lt;3 masks", "<3 masks"),
    ("unescape_html", "&amp;amp;", "&amp;"),
    ("unescape_html", "&quot;stay home&quot; &gt; go out", '"stay home" > go out'),
    ("unescape_html", "it&#39;s &#x41;&#66;", "it's AB"),
    ("unescape_html", "&nbsp;&amp &bogus; &#xZZ;", "&nbsp;&amp &bogus; &#xZZ;"),
    ("unescape_html", "&#128567;", MASK),
    ("normalize_whitespace", "a\t b\ncovid", "a b covid"),
    ("normalize_whitespace", "  x  ", "x"),
    ("normalize_whitespace", "x", "x"),
    ("normalize_whitespace", "line1\r\nline2\n\n\tline3", "line1 line2 line3"),
    ("replace_url_token", "cases rising HTTPURL", "cases rising URL"),
    ("replace_url_token", "HTTPURL HTTPURL", "URL URL"),
    ("replace_url_token", "xHTTPURLx", "xHTTPURLx"),
    ("replace_url_token", "see:HTTPURL\tHTTPURL", "see:HTTPURL\tURL"),
    ("demojize", "stay safe " + MASK, "stay safe  :face_with_medical_mask: "),
    ("demojize", "no emoji", "no emoji"),
    ("demojize", "new " + UNKNOWN, "new " + UNKNOWN),
    ("demojize", US_FLAG + HEART_VS, " :united_states:  :red_heart: "),
    ("demojize", MASK + JOY, " :face_with_medical_mask:  :face_with_tears_of_joy: "),
    ("demojize", THUMBS_MEDIUM, " :thumbs_up:  :medium_skin_tone: "),
    ("preprocess_text", "Stay &amp; safe " + MASK + "  HTTPURL", "Stay & safe :face_with_medical_mask: URL"),
    ("preprocess_text", "already clean text", "already clean text"),
    ("preprocess_text", "", ""),
    ("preprocess_text", "@USER cases up\n\n" + JOY + JOY + " HTTPURL", "@USER cases up :face_with_tears_of_joy: :face_with_tears_of_joy: URL"),
    ("preprocess_text", "HTTPURL" + MASK, "URL :face_with_medical_mask:"),
    ("preprocess_text", "\t&lt;3 " + US_FLAG + "\r\n", "<3 :united_states:"),
    ("preprocess_text", "Q&amp;A &#10; next", "Q&A next"),
]
