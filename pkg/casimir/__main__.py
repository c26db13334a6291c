from casimir.cli import main

main()
