from gpysieve.cli import main

main()
