/// Canned replies behind the worker's four default buttons, in button order.
pub const DEFAULT_RESPONSES: [&str; 4] = [
    "Yes, I agree.",
    "No, I don't think so.",
    "Could you repeat that again?",
    "I am thinking about it. Could you provide more information?",
];

pub fn default_responses() -> &'static [&'static str; 4] {
    &DEFAULT_RESPONSES
}
