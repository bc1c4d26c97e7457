use clap::Parser;

fn main() {
    let cli = seqlab_cli::Cli::parse();
    match seqlab_cli::run(cli) {
        Ok(msg) => println!("{msg}"),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
