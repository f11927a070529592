//! Fallback annotation: frames from a trigger lexicon, entity mentions from
//! document titles.
//!
//!     cargo run --example annotate_claims

use frame_verifier::annotate::{annotate_claim, FrameLexicon, Gazetteer, DEFAULT_MAX_NGRAM};
use frame_verifier::corpus::tokenize;
use frame_verifier::AnnotatedClaim;

fn main() -> frame_verifier::Result<()> {
    let mut lexicon = FrameLexicon::new();
    lexicon.insert("born", "Being_born")?;
    lexicon.insert("directed", "Behind_the_scenes")?;
    lexicon.insert("won", "Win_prize")?;
    let titles = Gazetteer::from_titles(["Nikolaj_Coster-Waldau", "Game_of_Thrones", "Fox_Broadcasting_Company", "Paris"]);

    for text in [
        "Nikolaj Coster-Waldau worked with the Fox Broadcasting Company",
        "Game of Thrones won an award",
        "He was born in Paris",
    ] {
        let mut claim = AnnotatedClaim::new("example", text);
        claim.tokens = tokenize(text);
        annotate_claim(&mut claim, &lexicon, &titles, DEFAULT_MAX_NGRAM);
        println!("{text:?}\n  frames {:?}\n  entities {:?}", claim.frames, claim.entities);
    }
    Ok(())
}
